"""Fixed-format MPS export/import for industrial solvers.

Names are deterministic (column/row index in base-36, always <= 8 chars)
and a sidecar JSON name map records the semantic keys so solutions from
external solvers can be mapped back.  Values are written with Python float
repr, the shortest digits that round-trip exactly, so
``read_mps(write_mps(i))`` reproduces the matrix, bounds, integrality and
objective bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from hsc_plan.builder import MilpInstance, Row, Variable, VariableRegistry, key_to_str, str_to_key

_OBJ = "COST"
_B36 = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class MpsFormatError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


def _b36(n: int) -> str:
    if n == 0:
        return "0"
    digits = []
    while n:
        n, r = divmod(n, 36)
        digits.append(_B36[r])
    return "".join(reversed(digits))


def col_name(idx: int) -> str:
    return "C" + _b36(idx)


def row_name(idx: int) -> str:
    return "R" + _b36(idx)


def _num(v: float) -> str:
    if v == math.floor(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


# classic fixed-format field starts (0-based): indicator, name, row/col,
# value, second row, second value
_STARTS = (1, 4, 14, 24, 39, 49)


def _fields(*slots: tuple[int, str]) -> str:
    line = ""
    for field_no, text in slots:
        start = _STARTS[field_no]
        if len(line) < start:
            line += " " * (start - len(line))
        elif line:
            line += " "  # never glue fields together
        line += text
    return line


def write_mps(instance: MilpInstance, destination, name: str = "HSCPLAN",
              name_map_path=None) -> None:
    """Write ``instance`` as fixed-format MPS.

    ``destination`` is a path or text file object.  When a path is given,
    the sidecar name map is written next to it as ``<file>.names.json``
    unless ``name_map_path`` overrides it.
    """
    close = False
    if isinstance(destination, (str, Path)):
        path = Path(destination)
        fh = open(path, "w", encoding="ascii")
        close = True
        if name_map_path is None:
            name_map_path = path.with_name(path.name + ".names.json")
    else:
        fh = destination
    try:
        _write_body(instance, fh, name)
    finally:
        if close:
            fh.close()
    if name_map_path is not None:
        payload = {
            "objective": _OBJ,
            "columns": {col_name(j): key_to_str(v.key)
                        for j, v in enumerate(instance.registry.variables)},
            "rows": {row_name(i): key_to_str(r.key) for i, r in enumerate(instance.rows)},
        }
        with open(name_map_path, "w", encoding="ascii") as mh:
            json.dump(payload, mh, indent=1, sort_keys=True)


def _write_body(instance: MilpInstance, fh, name: str) -> None:
    w = lambda line: fh.write(line + "\n")
    w("NAME" + " " * 10 + name)
    w("ROWS")
    w(_fields((0, "N"), (1, _OBJ)))
    for i, row in enumerate(instance.rows):
        w(_fields((0, row.sense), (1, row_name(i))))

    # column-major entries, objective first, in row order
    by_col: dict[int, list[tuple[str, float]]] = {}
    for j, var in enumerate(instance.registry.variables):
        entries = []
        if var.obj != 0.0:
            entries.append((_OBJ, var.obj))
        by_col[j] = entries
    for i, row in enumerate(instance.rows):
        rn = row_name(i)
        for j, val in sorted(row.coeffs):
            by_col[j].append((rn, val))

    def data_lines(name_field: str, entries: list[tuple[str, float]]) -> None:
        for k in range(0, len(entries), 2):
            slots = [(1, name_field)]
            for offset, (rn, val) in enumerate(entries[k:k + 2]):
                slots.append((2 + 2 * offset, rn))
                slots.append((3 + 2 * offset, _num(val)))
            w(_fields(*slots))

    w("COLUMNS")
    in_int = False
    marker = 0
    for j, var in enumerate(instance.registry.variables):
        if var.integer != in_int:
            tag = "'INTORG'" if var.integer else "'INTEND'"
            w(_fields((1, f"M{marker}"), (2, "'MARKER'"), (4, tag)))
            marker += 1
            in_int = var.integer
        entries = by_col[j] or [(_OBJ, 0.0)]  # keep empty columns representable
        data_lines(col_name(j), entries)
    if in_int:
        w(_fields((1, f"M{marker}"), (2, "'MARKER'"), (4, "'INTEND'")))

    w("RHS")
    data_lines("RHS1", [(row_name(i), r.rhs)
                        for i, r in enumerate(instance.rows) if r.rhs != 0.0])

    w("BOUNDS")
    for j, var in enumerate(instance.registry.variables):
        cn = col_name(j)
        lb, ub = var.lb, var.ub
        if lb == ub:
            w(_fields((0, "FX"), (1, "BND1"), (2, cn), (3, _num(lb))))
            continue
        if math.isinf(lb) and math.isinf(ub):
            w(_fields((0, "FR"), (1, "BND1"), (2, cn)))
            continue
        if math.isinf(lb):
            w(_fields((0, "MI"), (1, "BND1"), (2, cn)))
        elif lb != 0.0 or var.integer:
            w(_fields((0, "LO"), (1, "BND1"), (2, cn), (3, _num(lb))))
        if math.isinf(ub):
            if not (lb == 0.0 and not var.integer):
                w(_fields((0, "PL"), (1, "BND1"), (2, cn)))
        else:
            w(_fields((0, "UP"), (1, "BND1"), (2, cn), (3, _num(ub))))
    w("ENDATA")


def read_mps(source, name_map=None) -> MilpInstance:
    """Parse fixed-format MPS back into a :class:`MilpInstance`.

    ``name_map`` may be a path to the sidecar produced by
    :func:`write_mps`; when omitted and ``source`` is a path, the sidecar
    is picked up automatically if present.  Without a map, keys default to
    ``("col", name)`` / ``("row", name)``.  RANGES entries are expanded
    into a second inequality row.
    """
    close = False
    if isinstance(source, (str, Path)):
        path = Path(source)
        fh = open(path, "r", encoding="ascii")
        close = True
        if name_map is None:
            side = path.with_name(path.name + ".names.json")
            if side.exists():
                name_map = side
    else:
        fh = source
    try:
        lines = fh.read().splitlines()
    finally:
        if close:
            fh.close()

    col_keys: dict[str, tuple] = {}
    row_keys: dict[str, tuple] = {}
    if name_map is not None:
        with open(name_map, "r", encoding="ascii") as mh:
            payload = json.load(mh)
        col_keys = {n: str_to_key(s) for n, s in payload.get("columns", {}).items()}
        row_keys = {n: _row_key(s) for n, s in payload.get("rows", {}).items()}

    section = None
    obj_row: str | None = None
    rows: list[tuple[str, str]] = []  # (sense, name)
    row_index: dict[str, int] = {}
    cols: dict[str, dict] = {}
    col_order: list[str] = []
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    in_int = False

    known = {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "OBJSENSE", "ENDATA"}
    for ln, raw in enumerate(lines, start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if raw[0] not in " \t":
            head = raw.split()[0].upper()
            if head not in known:
                raise MpsFormatError(f"unknown section {head!r}", ln)
            section = head
            if head == "ENDATA":
                break
            continue
        f = raw.split()
        if section == "ROWS":
            if len(f) != 2:
                raise MpsFormatError("ROWS entries need sense and name", ln)
            sense, rname = f[0].upper(), f[1]
            if sense == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if sense not in ("E", "L", "G"):
                raise MpsFormatError(f"unknown row sense {f[0]!r}", ln)
            row_index[rname] = len(rows)
            rows.append((sense, rname))
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1] == "'MARKER'":
                if f[2] == "'INTORG'":
                    in_int = True
                elif f[2] == "'INTEND'":
                    in_int = False
                else:
                    raise MpsFormatError(f"unknown marker {f[2]!r}", ln)
                continue
            if len(f) not in (3, 5):
                raise MpsFormatError("COLUMNS entries need 1 or 2 (row, value) pairs", ln)
            cname = f[0]
            if cname not in cols:
                cols[cname] = {"integer": in_int, "entries": {}, "obj": 0.0,
                               "lb": 0.0, "ub": math.inf,
                               "lb_set": False, "ub_set": False}
                col_order.append(cname)
            for rname, sval in zip(f[1::2], f[2::2]):
                val = _parse_num(sval, ln)
                if rname == obj_row:
                    cols[cname]["obj"] += val
                elif rname in row_index:
                    e = cols[cname]["entries"]
                    e[row_index[rname]] = e.get(row_index[rname], 0.0) + val
                else:
                    raise MpsFormatError(f"unknown row {rname!r}", ln)
        elif section == "RHS":
            if len(f) not in (3, 5):
                raise MpsFormatError("RHS entries need 1 or 2 (row, value) pairs", ln)
            for rname, sval in zip(f[1::2], f[2::2]):
                if rname == obj_row:
                    continue  # objective constants are not represented
                if rname not in row_index:
                    raise MpsFormatError(f"unknown row {rname!r}", ln)
                rhs[rname] = _parse_num(sval, ln)
        elif section == "RANGES":
            if len(f) not in (3, 5):
                raise MpsFormatError("RANGES entries need 1 or 2 (row, value) pairs", ln)
            for rname, sval in zip(f[1::2], f[2::2]):
                if rname not in row_index:
                    raise MpsFormatError(f"unknown row {rname!r}", ln)
                ranges[rname] = _parse_num(sval, ln)
        elif section == "BOUNDS":
            if len(f) < 3:
                raise MpsFormatError("BOUNDS entries need type, set name, column", ln)
            btype, cname = f[0].upper(), f[2]
            if cname not in cols:
                raise MpsFormatError(f"unknown column {cname!r}", ln)
            col = cols[cname]
            if btype in ("UP", "LO", "FX", "UI", "LI"):
                if len(f) < 4:
                    raise MpsFormatError(f"bound {btype} needs a value", ln)
                val = _parse_num(f[3], ln)
            if btype == "UP":
                col["ub"], col["ub_set"] = val, True
                # classic convention: UP with negative value and no LO makes lb -inf
                if val < 0 and not col["lb_set"]:
                    col["lb"] = -math.inf
            elif btype == "LO":
                col["lb"], col["lb_set"] = val, True
            elif btype == "FX":
                col["lb"] = col["ub"] = val
                col["lb_set"] = col["ub_set"] = True
            elif btype == "FR":
                col["lb"], col["ub"] = -math.inf, math.inf
                col["lb_set"] = col["ub_set"] = True
            elif btype == "MI":
                col["lb"], col["lb_set"] = -math.inf, True
            elif btype == "PL":
                col["ub"], col["ub_set"] = math.inf, True
            elif btype == "BV":
                col["integer"], col["lb"], col["ub"] = True, 0.0, 1.0
                col["lb_set"] = col["ub_set"] = True
            elif btype == "UI":
                col["integer"], col["ub"], col["ub_set"] = True, val, True
            elif btype == "LI":
                col["integer"], col["lb"], col["lb_set"] = True, val, True
            else:
                raise MpsFormatError(f"unknown bound type {btype!r}", ln)
        elif section in ("NAME", "OBJSENSE"):
            continue
        else:
            raise MpsFormatError("data line before any section header", ln)

    registry = VariableRegistry()
    for j, cname in enumerate(col_order):
        col = cols[cname]
        key = col_keys.get(cname, ("col", cname))
        registry.add(key, lb=col["lb"], ub=col["ub"], obj=col["obj"], integer=col["integer"])

    out_rows: list[Row] = []
    col_of = {cname: j for j, cname in enumerate(col_order)}
    entries_by_row: dict[int, list[tuple[int, float]]] = {i: [] for i in range(len(rows))}
    for cname in col_order:
        j = col_of[cname]
        for i, val in cols[cname]["entries"].items():
            if val != 0.0:
                entries_by_row[i].append((j, val))
    for i, (sense, rname) in enumerate(rows):
        key = row_keys.get(rname, ("row", rname))
        out_rows.append(Row(key=key, coeffs=sorted(entries_by_row[i]), sense=sense,
                            rhs=rhs.get(rname, 0.0)))
        if rname in ranges:
            out_rows.append(_range_row(out_rows[-1], ranges[rname], rname))

    return MilpInstance(registry=registry, rows=out_rows,
                        metadata={"source": "mps"})


def _row_key(text: str) -> tuple:
    parts = text.split(":")
    return tuple(int(p) if p.lstrip("-").isdigit() else p for p in parts)


def _parse_num(text: str, ln: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise MpsFormatError(f"bad number {text!r}", ln) from None


def _range_row(row: Row, rng: float, rname: str) -> Row:
    """Second side of a ranged row, per the usual MPS range semantics."""
    if row.sense == "L":
        sense, rhs = "G", row.rhs - abs(rng)
    elif row.sense == "G":
        sense, rhs = "L", row.rhs + abs(rng)
    else:  # E row: range sign picks the side
        sense, rhs = ("L", row.rhs + rng) if rng >= 0 else ("G", row.rhs + rng)
    return Row(key=("row", rname, "range"), coeffs=list(row.coeffs), sense=sense, rhs=rhs)
