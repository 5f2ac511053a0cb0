import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loctimes import (
    Atom,
    DensityPiece,
    MeasureConfigError,
    WeightedMeasure,
    counterexample_measure,
    load_measure,
    measure_from_dict,
    parse_measure_text,
)


def brute_force_window_sup(measure, gamma, lo, hi, n=200_001):
    """Independent oracle for concentration: dense scan of window centers."""
    best = 0.0
    step = (hi - lo) / (n - 1)
    for i in range(n):
        x = lo + i * step
        best = max(best, measure.interval_mass(x - gamma, x + gamma))
    return best


class TestConstruction:
    def test_negative_mass_rejected(self):
        with pytest.raises(MeasureConfigError, match="mass"):
            Atom(0.0, -1.0)

    def test_zero_mass_rejected(self):
        with pytest.raises(MeasureConfigError, match="mass"):
            Atom(0.0, 0.0)

    def test_nan_location_rejected(self):
        with pytest.raises(MeasureConfigError, match="finite"):
            Atom(math.nan, 1.0)

    def test_duplicate_atom_locations_rejected(self):
        with pytest.raises(MeasureConfigError, match="duplicate"):
            WeightedMeasure((Atom(1.0, 1.0), Atom(1.0, 2.0)), ())

    def test_density_needs_lo_lt_hi(self):
        with pytest.raises(MeasureConfigError, match="lo < hi"):
            DensityPiece(1.0, 1.0, 2.0)

    def test_density_negative_value_rejected(self):
        with pytest.raises(MeasureConfigError, match=">= 0"):
            DensityPiece(0.0, 1.0, -0.5)

    def test_overlapping_pieces_rejected(self):
        with pytest.raises(MeasureConfigError, match="overlap"):
            WeightedMeasure((), (DensityPiece(0.0, 2.0, 1.0), DensityPiece(1.0, 3.0, 1.0)))

    def test_atoms_sorted(self):
        m = WeightedMeasure((Atom(2.0, 1.0), Atom(-1.0, 3.0)), ())
        assert [a.location for a in m.atoms] == [-1.0, 2.0]

    def test_empty_measure_is_zero(self):
        m = WeightedMeasure()
        assert m.is_zero
        assert m.total_mass() == 0.0
        assert m.max_atom() == 0.0
        assert m.support_bounds() is None


class TestIntervalMass:
    def test_atom_inside(self, delta0):
        assert delta0.interval_mass(-1.0, 1.0) == 1.0

    def test_atom_on_endpoint_counts(self, delta0):
        assert delta0.interval_mass(0.0, 1.0) == 1.0
        assert delta0.interval_mass(-1.0, 0.0) == 1.0

    def test_atom_outside(self, delta0):
        assert delta0.interval_mass(0.5, 1.0) == 0.0

    def test_density_overlap(self, uniform01):
        assert uniform01.interval_mass(0.0, 0.5) == pytest.approx(0.5, rel=1e-15)
        assert uniform01.interval_mass(-1.0, 2.0) == pytest.approx(1.0, rel=1e-15)

    def test_mixed(self, mixed):
        assert mixed.interval_mass(-0.5, 0.25) == pytest.approx(1.25, rel=1e-15)

    def test_reversed_interval_rejected(self, delta0):
        with pytest.raises(ValueError, match="a <= b"):
            delta0.interval_mass(1.0, 0.0)

    def test_riemann_cross_check(self):
        m = WeightedMeasure(
            (Atom(0.3, 0.7),),
            (DensityPiece(0.0, 1.0, 2.0), DensityPiece(1.5, 2.0, 0.5)),
        )
        a, b = 0.1, 1.8
        n = 200_000
        h = (b - a) / n
        # midpoint rule on the density plus the atoms inside [a, b]
        total = 0.0
        for i in range(n):
            x = a + (i + 0.5) * h
            for p in m.density:
                if p.lo <= x < p.hi:
                    total += p.value * h
        total += sum(at.mass for at in m.atoms if a <= at.location <= b)
        assert m.interval_mass(a, b) == pytest.approx(total, abs=1e-4)


class TestConcentration:
    def test_two_atoms_narrow_window(self):
        m = WeightedMeasure((Atom(0.0, 1.0), Atom(0.5, 1.0)), ())
        assert m.concentration(0.2) == 1.0

    def test_two_atoms_wide_window(self):
        m = WeightedMeasure((Atom(0.0, 1.0), Atom(0.5, 1.0)), ())
        assert m.concentration(0.3) == 2.0

    def test_window_edge_captures_both(self):
        # window [x-g, x+g] is closed: at gamma = 0.25 a center at 0.25
        # touches both atoms
        m = WeightedMeasure((Atom(0.0, 1.0), Atom(0.5, 1.0)), ())
        assert m.concentration(0.25) == 2.0

    def test_uniform_density(self, uniform01):
        assert uniform01.concentration(0.04) == pytest.approx(0.08, rel=1e-12)

    def test_at_least_max_atom(self, mixed):
        assert mixed.concentration(2.0 ** -20) >= mixed.max_atom()

    def test_purely_atomic_small_gamma_equals_max_atom(self):
        m = WeightedMeasure((Atom(0.0, 1.0), Atom(3.0, 2.0)), ())
        assert m.concentration(2.0 ** -20) == 2.0

    def test_monotone_in_gamma(self, mixed):
        gammas = [0.01, 0.05, 0.1, 0.5, 1.0, 2.0]
        vals = [mixed.concentration(g) for g in gammas]
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))

    def test_nonpositive_gamma_rejected(self, delta0):
        with pytest.raises(ValueError, match="gamma"):
            delta0.concentration(0.0)

    def test_against_brute_force(self):
        m = WeightedMeasure(
            (Atom(-0.4, 0.3), Atom(0.1, 0.8), Atom(0.15, 0.2)),
            (DensityPiece(-1.0, 0.5, 1.5), DensityPiece(0.7, 0.9, 4.0)),
        )
        for gamma in (0.05, 0.17, 0.4):
            exact = m.concentration(gamma)
            scan = brute_force_window_sup(m, gamma, -2.0, 2.0)
            assert exact >= scan - 1e-12
            assert exact == pytest.approx(scan, abs=4.0 * 4.0 / 200_000 * 2 + 1e-9)


class TestSplitAndRestrict:
    def test_split_example(self, mixed):
        atomic, diffuse, gamma = mixed.split_atoms_vs_diffuse(0.05)
        assert [a.mass for a in atomic.atoms] == [1.0]
        assert diffuse.atoms == ()
        assert gamma == 2.0 ** -6
        assert diffuse.concentration(gamma) == pytest.approx(2.0 ** -5, rel=1e-12)
        assert diffuse.concentration(gamma) < 0.05

    def test_split_purely_atomic(self, delta0):
        atomic, diffuse, gamma = delta0.split_atoms_vs_diffuse(0.5)
        assert atomic.total_mass() == 1.0
        assert diffuse.is_zero
        assert gamma == 1.0

    def test_split_small_atoms_go_diffuse(self):
        m = WeightedMeasure((Atom(0.0, 1.0), Atom(5.0, 0.01)), ())
        atomic, diffuse, gamma = m.split_atoms_vs_diffuse(0.05)
        assert atomic.max_atom() == 1.0
        assert diffuse.max_atom() == 0.01
        assert diffuse.concentration(gamma) < 0.05

    def test_split_mass_conserved(self, mixed):
        atomic, diffuse, _ = mixed.split_atoms_vs_diffuse(0.05)
        assert atomic.total_mass() + diffuse.total_mass() == pytest.approx(
            mixed.total_mass(), rel=1e-12
        )

    def test_split_nonpositive_chi_rejected(self, mixed):
        with pytest.raises(ValueError, match="chi"):
            mixed.split_atoms_vs_diffuse(0.0)

    def test_restrict_inner_outer(self, uniform01):
        inner, outer = uniform01.restrict(0.5, 0.25)
        assert inner.total_mass() == pytest.approx(0.5, rel=1e-12)
        assert outer.total_mass() == pytest.approx(0.5, rel=1e-12)
        assert inner.support_bounds() == (0.25, 0.75)

    def test_restrict_boundary_atom_goes_inside(self):
        m = WeightedMeasure((Atom(1.0, 2.0),), ())
        inner, outer = m.restrict(0.0, 1.0)
        assert inner.total_mass() == 2.0
        assert outer.is_zero

    def test_restrict_all_inside(self, mixed):
        inner, outer = mixed.restrict(0.0, 100.0)
        assert outer.is_zero
        assert inner.total_mass() == pytest.approx(mixed.total_mass(), rel=1e-12)

    def test_restrict_radius_rejected(self, mixed):
        with pytest.raises(ValueError, match="radius"):
            mixed.restrict(0.0, 0.0)

    def test_restrict_counterexample_tail(self):
        m = counterexample_measure(3)
        inner, outer = m.restrict(1.0, 2.0)
        assert inner.total_mass() == 2.0  # the k=1 pair at 1 and 1.5
        assert outer.total_mass() == 4.0


class TestAlgebra:
    def test_add_merges_duplicate_atoms(self, delta0):
        m = delta0 + delta0
        assert len(m.atoms) == 1
        assert m.atoms[0].mass == 2.0

    def test_add_merges_overlapping_densities(self):
        a = WeightedMeasure((), (DensityPiece(0.0, 2.0, 1.0),))
        b = WeightedMeasure((), (DensityPiece(1.0, 3.0, 0.5),))
        m = a + b
        assert m.interval_mass(0.0, 1.0) == pytest.approx(1.0, rel=1e-12)
        assert m.interval_mass(1.0, 2.0) == pytest.approx(1.5, rel=1e-12)
        assert m.interval_mass(2.0, 3.0) == pytest.approx(0.5, rel=1e-12)

    def test_scaled(self, mixed):
        m = mixed.scaled(3.0)
        assert m.total_mass() == pytest.approx(3.0 * mixed.total_mass(), rel=1e-12)
        assert m.max_atom() == 3.0

    def test_scaled_zero_gives_zero_measure(self, mixed):
        assert mixed.scaled(0.0).is_zero

    def test_scaled_negative_rejected(self, mixed):
        with pytest.raises(ValueError, match=">= 0"):
            mixed.scaled(-1.0)


class TestCounterexampleMeasure:
    def test_k6_shape(self):
        m = counterexample_measure(6)
        assert len(m.atoms) == 12
        assert m.max_atom() == 1.0
        locs = [a.location for a in m.atoms]
        assert 36.0 in locs and 36.0 + 2.0 ** -6 in locs

    def test_pair_concentration_exceeds_atom(self):
        m = counterexample_measure(6)
        assert m.concentration(2.0 ** -6) == 2.0

    def test_bad_K(self):
        with pytest.raises(MeasureConfigError, match="K"):
            counterexample_measure(0)


class TestConfig:
    def test_round_trip(self, mixed):
        again = measure_from_dict(mixed.as_dict())
        assert again == mixed

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "m.yaml"
        path.write_text("atoms:\n  - {loc: 0.0, mass: 1.0}\ndensity:\n  - {lo: 0, hi: 1, value: 1}\n")
        m = load_measure(str(path))
        assert m.total_mass() == 2.0

    def test_json_text(self):
        m = parse_measure_text('{"atoms": [{"loc": 1, "mass": 2}]}')
        assert m.atoms[0] == Atom(1.0, 2.0)

    def test_counterexample_directive(self):
        m = parse_measure_text("counterexample: {K: 3}")
        assert m == counterexample_measure(3)

    def test_directive_excludes_lists(self):
        with pytest.raises(MeasureConfigError, match="counterexample"):
            parse_measure_text('{"counterexample": {"K": 2}, "atoms": []}')

    def test_unknown_key_named(self):
        with pytest.raises(MeasureConfigError, match="atomz"):
            measure_from_dict({"atomz": []})

    def test_bad_atom_field_named(self):
        with pytest.raises(MeasureConfigError, match=r"atoms\[1\]"):
            measure_from_dict({"atoms": [{"loc": 0, "mass": 1}, {"loc": 1, "mass": -2}]})

    def test_bad_density_field_named(self):
        with pytest.raises(MeasureConfigError, match=r"density\[0\]"):
            measure_from_dict({"density": [{"lo": 2, "hi": 1, "value": 1}]})

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        with pytest.raises(MeasureConfigError, match="empty"):
            load_measure(str(path))


finite_floats = st.floats(min_value=-50, max_value=50, allow_nan=False)
masses = st.floats(min_value=0.01, max_value=10, allow_nan=False)


@st.composite
def measures(draw):
    n_atoms = draw(st.integers(min_value=0, max_value=4))
    locs = draw(
        st.lists(finite_floats, min_size=n_atoms, max_size=n_atoms, unique=True)
    )
    atoms = tuple(Atom(loc, draw(masses)) for loc in locs)
    n_pieces = draw(st.integers(min_value=0, max_value=3))
    edges = sorted(
        draw(
            st.lists(
                finite_floats, min_size=2 * n_pieces, max_size=2 * n_pieces, unique=True
            )
        )
    )
    pieces = tuple(
        DensityPiece(edges[2 * i], edges[2 * i + 1], draw(masses))
        for i in range(n_pieces)
    )
    return WeightedMeasure(atoms, pieces)


@given(measures(), finite_floats, st.floats(min_value=0.01, max_value=5))
@settings(max_examples=60, deadline=None)
def test_restrict_preserves_interval_masses(m, x, radius):
    inner, outer = m.restrict(x, radius)
    for a, b in [(-60.0, 60.0), (x - radius, x + radius), (-3.0, 7.0)]:
        if a > b:
            a, b = b, a
        assert inner.interval_mass(a, b) + outer.interval_mass(a, b) == pytest.approx(
            m.interval_mass(a, b), rel=1e-9, abs=1e-9
        )


@given(measures(), st.floats(min_value=0.01, max_value=2), st.floats(min_value=1.0, max_value=3))
@settings(max_examples=60, deadline=None)
def test_concentration_monotone_and_bounded(m, gamma, factor):
    small = m.concentration(gamma)
    large = m.concentration(gamma * factor)
    assert small <= large + 1e-12
    assert small >= m.max_atom() - 1e-12
    assert large <= m.total_mass() + 1e-12
