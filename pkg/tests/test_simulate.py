import numpy as np
import pytest

from polsarkit.covariance import compute_covariance
from polsarkit.decomposition import h_alpha_field
from polsarkit.simulate import (
    analytic_truth,
    default_presets,
    generate_scene,
    layout_labels,
    scene_spec_from_json,
    standard_normal_fields,
)
from polsarkit.types import ClassSpec, Herm2, SceneSpec, ValidationError


def _spec(classes, h=64, w=64, layout="stripes", seed=0, voronoi_seeds=16):
    return SceneSpec(height=h, width=w, classes=classes, layout=layout,
                     seed=seed, voronoi_seeds=voronoi_seeds)


class TestNormals:
    def test_moments(self):
        fields = standard_normal_fields(123, 200, 200, 4)
        for f in fields:
            assert abs(f.mean()) < 0.02
            assert abs(f.std() - 1.0) < 0.02

    def test_deterministic_and_position_keyed(self):
        a = standard_normal_fields(5, 16, 16)[0]
        b = standard_normal_fields(5, 16, 16)[0]
        assert np.array_equal(a, b)
        # extending the raster keeps earlier pixels identical
        big = standard_normal_fields(5, 32, 32)[0]
        assert np.array_equal(big[:16, :16], a)

    def test_seed_changes_stream(self):
        a = standard_normal_fields(1, 8, 8)[0]
        b = standard_normal_fields(2, 8, 8)[0]
        assert not np.array_equal(a, b)


class TestLayouts:
    def test_stripes_cover_all_classes(self):
        spec = _spec(default_presets(), layout="stripes")
        labels = layout_labels(spec)
        assert set(np.unique(labels)) == set(range(5))

    def test_rectangles_cover_all_classes(self):
        spec = _spec(default_presets(), layout="rectangles")
        labels = layout_labels(spec)
        assert set(np.unique(labels)) == set(range(5))

    def test_voronoi_deterministic(self):
        spec = _spec(default_presets(), layout="voronoi", seed=3)
        a = layout_labels(spec)
        b = layout_labels(spec)
        assert np.array_equal(a, b)
        assert set(np.unique(a)) <= set(range(5))


class TestGenerateScene:
    def test_single_class_constant_map(self):
        classes = [ClassSpec("a", 1.0, 1.0, 0.5), ClassSpec("b", 2.0, 2.0, 0.5)]
        spec = _spec(classes, h=16, w=16)
        _, truth = generate_scene(spec)
        assert set(np.unique(truth.labels)) == {0, 1}
        one_class = SceneSpec(height=16, width=16,
                              classes=[ClassSpec("a", 1.0, 1.0, 0.0),
                                       ClassSpec("a2", 1.0, 1.0, 0.0)],
                              layout="stripes", seed=0)
        slc, truth = generate_scene(one_class)
        assert truth.labels[0, 0] == 0 and truth.labels[-1, -1] == 1

    def test_bit_identical_reruns(self):
        spec = _spec(default_presets(), h=32, w=32, seed=99)
        a, _ = generate_scene(spec)
        b, _ = generate_scene(spec)
        assert a.hh.tobytes() == b.hh.tobytes()
        assert a.vv.tobytes() == b.vv.tobytes()

    def test_law_of_large_numbers_covariance(self):
        # 1e5 pixels of a correlated class: sample lexicographic covariance
        # lands within 2% of the analytic entries
        cls = ClassSpec("x", 1.0, 1.0, 0.0)
        spec = SceneSpec(height=320, width=320, seed=17,
                         classes=[cls, cls], layout="stripes")
        slc, _ = generate_scene(spec)
        hh = slc.hh.astype(np.complex128).ravel()
        vv = slc.vv.astype(np.complex128).ravel()
        c11 = np.mean(np.abs(hh) ** 2)
        c22 = np.mean(np.abs(vv) ** 2)
        c12 = np.mean(hh * np.conj(vv))
        assert c11 == pytest.approx(1.0, abs=0.02)
        assert c22 == pytest.approx(1.0, abs=0.02)
        assert abs(c12) < 0.02

    def test_synthetic_metadata(self):
        spec = _spec(default_presets(), h=16, w=16, seed=2)
        slc, truth = generate_scene(spec)
        assert slc.meta.platform_kind == "synthetic"
        assert truth.class_names == [c.name for c in default_presets()]

    def test_non_psd_rejected(self):
        with pytest.raises(ValidationError):
            ClassSpec("bad", 1.0, 1.0, 1.5)


class TestPresets:
    def test_five_presets(self):
        presets = default_presets()
        assert [c.name for c in presets] == [
            "water", "roads", "bare_soil", "vegetation", "built_up",
        ]

    def test_built_up_high_alpha(self):
        t = analytic_truth(default_presets()[4])
        assert t["alpha"] > 60.0

    def test_vegetation_high_entropy(self):
        t = analytic_truth(default_presets()[3])
        assert t["H"] > 0.8

    def test_water_low_entropy(self):
        t = analytic_truth(default_presets()[0])
        assert t["H"] < 0.3


class TestAnalyticTruth:
    def test_perfect_surface(self):
        t = analytic_truth(ClassSpec("s", 1.0, 1.0, 1.0, 0.0))
        assert np.allclose(t["T2"], [[2, 0], [0, 0]])
        assert t["H"] == pytest.approx(0.0, abs=1e-12)
        assert t["alpha"] == pytest.approx(0.0, abs=1e-12)

    def test_perfect_double_bounce(self):
        t = analytic_truth(ClassSpec("d", 1.0, 1.0, 1.0, np.pi))
        assert np.allclose(t["T2"], [[0, 0], [0, 2]], atol=1e-15)
        assert t["H"] == pytest.approx(0.0, abs=1e-12)
        assert t["alpha"] == pytest.approx(90.0, abs=1e-9)

    def test_fully_depolarized(self):
        t = analytic_truth(ClassSpec("v", 1.0, 1.0, 0.0))
        assert np.allclose(t["T2"], np.eye(2))
        assert t["H"] == pytest.approx(1.0, abs=1e-12)
        assert t["alpha"] == pytest.approx(45.0, abs=1e-12)

    def test_lexicographic_matrix(self):
        cls = ClassSpec("x", 4.0, 1.0, 0.5, 0.0)
        t = analytic_truth(cls)
        assert t["C2"][0][0] == pytest.approx(4.0)
        assert t["C2"][1][1] == pytest.approx(1.0)
        assert t["C2"][0][1] == pytest.approx(0.5 * 2.0)


class TestEstimateConvergence:
    def test_window7_halpha_on_homogeneous_block(self):
        # 128x128 homogeneous regions: window-7 estimates track analytic
        # H within 0.05 and alpha within 3 degrees
        for cls in default_presets():
            spec = SceneSpec(height=128, width=128, seed=41,
                             classes=[cls, cls], layout="stripes")
            slc, _ = generate_scene(spec)
            cov = compute_covariance(slc, window=7, basis="pauli")
            f = h_alpha_field(cov)
            t = analytic_truth(cls)
            inner_h = f.H[8:-8, 8:-8]
            inner_a = f.alpha[8:-8, 8:-8]
            assert abs(float(inner_h.mean()) - t["H"]) < 0.05, cls.name
            assert abs(float(inner_a.mean()) - t["alpha"]) < 3.0, cls.name


class TestSceneSpecJson:
    def test_presets_shortcut(self):
        spec = scene_spec_from_json({"height": 64, "width": 48, "classes": "presets"})
        assert len(spec.classes) == 5
        assert spec.width == 48

    def test_explicit_classes(self):
        spec = scene_spec_from_json(
            {
                "height": 32, "width": 32, "seed": 4, "layout": "voronoi",
                "voronoi_seeds": 8,
                "classes": [
                    {"name": "a", "sigma_hh": 1, "sigma_vv": 1, "rho_mag": 0.5},
                    {"name": "b", "sigma_hh": 2, "sigma_vv": 1, "rho_mag": 0.1,
                     "rho_phase": 3.14},
                ],
            }
        )
        assert spec.classes[1].rho_phase == pytest.approx(3.14)

    def test_too_few_classes_rejected(self):
        with pytest.raises(ValidationError):
            scene_spec_from_json({"height": 32, "width": 32, "classes": [
                {"name": "a", "sigma_hh": 1, "sigma_vv": 1, "rho_mag": 0.5}]})
