"""Text renderings of pipeline stages, in the tier-table layout."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .decompose import Ctf
from .formula import TabularFormula


def render_formula(formula: TabularFormula,
                   names: Sequence[str] | None = None) -> str:
    """0/1 table of the formula: one row per clause, marks under the
    variable columns."""
    if names is None:
        names = ["x%d" % v for v in range(1, formula.n + 1)]
    widths = [max(2, len(s)) for s in names]
    rows = [" ".join(s.rjust(w) for s, w in zip(names, widths))]
    for clause in formula.clauses:
        cells = [""] * formula.n
        for v, mark in clause.entries:
            cells[v - 1] = str(mark)
        rows.append(" ".join(s.rjust(w) for s, w in zip(cells, widths)).rstrip())
    return "\n".join(rows) + "\n"


def render_ctf(ctf: Ctf, names: Sequence[str] | None = None) -> str:
    """Tier table of a CT formula (clause mark patterns per window)."""
    n = len(ctf.perm)
    if names is None:
        names = ["x%d" % v for v in range(1, n + 1)]
    header = [names[v - 1] for v in ctf.perm.order]
    widths = [max(2, len(s)) for s in header]
    rows = [" ".join(s.rjust(w) for s, w in zip(header, widths))]
    for j, code in ctf.clause_lines():
        cells = [""] * n
        for k in range(3):
            cells[j + k] = str((code >> (2 - k)) & 1)
        rows.append(" ".join(s.rjust(w) for s, w in zip(cells, widths)).rstrip())
    return "\n".join(rows) + "\n"


class FileTraceSink:
    """Writes each stage to <dir>/<seq>_<name>.txt in emission order."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._seq = 0

    def write(self, name: str, content: str) -> Path:
        path = self.directory / ("%02d_%s.txt" % (self._seq, name))
        self._seq += 1
        if not content.endswith("\n"):
            content += "\n"
        path.write_text(content)
        return path
