"""MPS writer/reader: golden file, round-trip identity, markers, errors."""

import io

import pytest
from hypothesis import given, settings, strategies as st

from hsc_plan.builder import MilpInstance, Row, VariableRegistry
from hsc_plan.solver import MpsFormatError, read_mps, write_mps

INF = float("inf")

GOLDEN_ONE_ROW_ONE_VAR = """\
NAME          GOLDEN1
ROWS
 N  COST
 G  R0
COLUMNS
    C0        COST      2.5            R0        1
RHS
    RHS1      R0        3
BOUNDS
 UP BND1      C0        4
ENDATA
"""


def simple_instance():
    reg = VariableRegistry()
    reg.add(("col", "x0"), lb=0.0, ub=4.0, obj=2.5)
    return MilpInstance(registry=reg,
                        rows=[Row(key=("r", 0), coeffs=[(0, 1.0)], sense="G", rhs=3.0)])


def fingerprint(inst: MilpInstance):
    """Everything round-trip identity is defined over."""
    return (
        [(v.lb, v.ub, v.obj, v.integer) for v in inst.registry.variables],
        [(sorted(r.coeffs), r.sense, r.rhs) for r in inst.rows],
    )


class TestWriter:
    def test_golden_file_byte_exact(self):
        buf = io.StringIO()
        write_mps(simple_instance(), buf, name="GOLDEN1")
        assert buf.getvalue() == GOLDEN_ONE_ROW_ONE_VAR

    def test_marker_lines_only_with_integers(self):
        reg = VariableRegistry()
        reg.add(("col", "a"), ub=3.0, obj=1.0, integer=True)
        reg.add(("col", "b"), ub=3.0, obj=1.0)
        inst = MilpInstance(registry=reg,
                            rows=[Row(key=("r", 0), coeffs=[(0, 1.0), (1, 1.0)], sense="G", rhs=1.0)])
        buf = io.StringIO()
        write_mps(inst, buf)
        text = buf.getvalue()
        assert "'INTORG'" in text and "'INTEND'" in text

        buf = io.StringIO()
        write_mps(simple_instance(), buf)
        assert "'MARKER'" not in buf.getvalue()

    def test_sidecar_name_map(self, tmp_path):
        path = tmp_path / "m.mps"
        write_mps(simple_instance(), path)
        side = tmp_path / "m.mps.names.json"
        assert side.exists()
        import json

        payload = json.loads(side.read_text())
        assert payload["columns"]["C0"] == "col:x0"


class TestRoundTrip:
    def test_simple_round_trip(self, tmp_path):
        inst = simple_instance()
        path = tmp_path / "i.mps"
        write_mps(inst, path)
        back = read_mps(path)
        assert fingerprint(back) == fingerprint(inst)
        # the sidecar restores semantic keys
        assert back.registry.keys() == inst.registry.keys()

    def test_mini_instance_round_trip(self, tmp_path, mini_instance):
        path = tmp_path / "mini.mps"
        write_mps(mini_instance, path)
        back = read_mps(path)
        assert fingerprint(back) == fingerprint(mini_instance)
        assert back.registry.keys() == mini_instance.registry.keys()

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_random_round_trip(self, data):
        n = data.draw(st.integers(1, 5))
        m = data.draw(st.integers(0, 5))
        reg = VariableRegistry()
        for j in range(n):
            lb = data.draw(st.sampled_from([0.0, -1.5, -INF, 2.25]))
            ub = data.draw(st.sampled_from([INF, 4.5, 10.0]))
            if lb > ub:
                lb, ub = ub, lb
            fixed = data.draw(st.booleans())
            if fixed and ub is not INF:
                lb = ub
            reg.add(("col", f"x{j}"), lb=lb, ub=ub,
                    obj=data.draw(st.sampled_from([0.0, 1.0, -2.5, 0.3333333333333333])),
                    integer=data.draw(st.booleans()))
        rows = []
        for i in range(m):
            coeffs = [(j, data.draw(st.sampled_from([0.0, 1.0, -1.0, 0.1, 7.0])))
                      for j in range(n)]
            coeffs = [(j, c) for j, c in coeffs if c != 0.0]
            if not coeffs:
                continue
            rows.append(Row(key=("r", i), coeffs=coeffs,
                            sense=data.draw(st.sampled_from(["L", "G", "E"])),
                            rhs=data.draw(st.sampled_from([0.0, 3.5, -2.0, 1e6]))))
        inst = MilpInstance(registry=reg, rows=rows)
        buf = io.StringIO()
        write_mps(inst, buf)
        back = read_mps(io.StringIO(buf.getvalue()))
        assert fingerprint(back) == fingerprint(inst)

    def test_exact_float_values_survive(self, tmp_path):
        reg = VariableRegistry()
        ugly = 0.1 + 0.2  # 0.30000000000000004
        reg.add(("col", "x0"), lb=-ugly, ub=1e308, obj=ugly)
        inst = MilpInstance(registry=reg,
                            rows=[Row(key=("r", 0), coeffs=[(0, 1e-13)], sense="L", rhs=ugly)])
        path = tmp_path / "f.mps"
        write_mps(inst, path)
        back = read_mps(path)
        assert back.registry.variables[0].obj == ugly
        assert back.rows[0].coeffs[0][1] == 1e-13
        assert back.rows[0].rhs == ugly


class TestReader:
    def test_unknown_section_rejected_with_line_number(self):
        text = "NAME  X\nROWS\n N  COST\nFROBNICATE\nENDATA\n"
        with pytest.raises(MpsFormatError) as err:
            read_mps(io.StringIO(text))
        assert err.value.line_no == 4

    def test_bad_number_rejected(self):
        text = ("NAME  X\nROWS\n N  COST\n L  R0\nCOLUMNS\n"
                "    C0  R0  notanumber\nENDATA\n")
        with pytest.raises(MpsFormatError) as err:
            read_mps(io.StringIO(text))
        assert "notanumber" in str(err.value)

    def test_unknown_row_in_columns(self):
        text = ("NAME  X\nROWS\n N  COST\n L  R0\nCOLUMNS\n"
                "    C0  NOPE  1.0\nENDATA\n")
        with pytest.raises(MpsFormatError):
            read_mps(io.StringIO(text))

    def test_ranges_expand_to_second_row(self):
        text = (
            "NAME  X\n"
            "ROWS\n N  COST\n L  R0\n"
            "COLUMNS\n    C0  R0  1.0\n    C0  COST  1.0\n"
            "RHS\n    RHS1  R0  10.0\n"
            "RANGES\n    RNG  R0  4.0\n"
            "BOUNDS\n"
            "ENDATA\n")
        inst = read_mps(io.StringIO(text))
        assert inst.n_rows == 2
        senses = {(r.sense, r.rhs) for r in inst.rows}
        assert senses == {("L", 10.0), ("G", 6.0)}

    def test_free_and_mi_bounds(self):
        text = (
            "NAME  X\nROWS\n N  COST\n G  R0\n"
            "COLUMNS\n    C0  R0  1.0\n    C1  R0  1.0\n"
            "RHS\n    RHS1  R0  1.0\n"
            "BOUNDS\n FR  B  C0\n MI  B  C1\n UP  B  C1  5.0\n"
            "ENDATA\n")
        inst = read_mps(io.StringIO(text))
        v0, v1 = inst.registry.variables
        assert (v0.lb, v0.ub) == (-INF, INF)
        assert (v1.lb, v1.ub) == (-INF, 5.0)
