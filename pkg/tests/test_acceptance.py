"""Acceptance suite: one test per release criterion, at pinned tolerances.

Each test prints a single PASS line on success (run with -s to see them);
a failed assertion marks the criterion red.
"""

import hashlib
import json
import time

import numpy as np
import pytest

from polsarkit import dataset, pfr
from polsarkit.cli import main
from polsarkit.covariance import change_basis, compute_covariance
from polsarkit.decomposition import h_alpha, h_alpha_field
from polsarkit.metrics import confusion, metrics
from polsarkit.simulate import analytic_truth, default_presets, generate_scene
from polsarkit.types import ClassMap, Herm2, PatchSet, SceneSpec
from polsarkit.wishart import wishart_distance, wishart_iterate


def _report(name: str) -> None:
    print(f"[PASS] {name}")


def _random_psd_arrays(n: int, seed: int):
    """n random PSD matrices as (c11, c22, c12) arrays, mixed ranks."""
    rng = np.random.default_rng(seed)
    k1 = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    k2 = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    w = rng.uniform(0.0, 1.0, size=(n, 1, 1))
    m = np.einsum("ni,nj->nij", k1, np.conj(k1)) + w * np.einsum(
        "ni,nj->nij", k2, np.conj(k2)
    )
    scale = rng.uniform(1e-3, 1e3, size=(n, 1, 1))
    m = m * scale
    return m[:, 0, 0].real, m[:, 1, 1].real, m[:, 0, 1]


class TestAugmentationArithmetic:
    def test_2208_patches_augment_to_13248(self):
        rng = np.random.default_rng(0)
        n = 2208
        patches = [
            rng.normal(size=(256, 256, 1)).astype(np.float32) for _ in range(n)
        ]
        masks = [
            rng.integers(0, 5, size=(256, 256)).astype(np.uint8) for _ in range(n)
        ]
        prov = [
            {"scene_id": "s", "row": 256 * i, "col": 0, "augment": "id"}
            for i in range(n)
        ]
        ps = PatchSet(
            patches=patches, masks=masks, channel_names=["ch0"],
            class_names=[str(i) for i in range(5)], provenance=prov,
        )
        start = time.perf_counter()
        out = dataset.augment(ps)
        elapsed = time.perf_counter() - start
        assert len(out) == 13248
        assert elapsed < 60.0, f"augmentation took {elapsed:.1f}s"
        _report(
            f"augmentation arithmetic: 2208 -> 13248 samples in {elapsed:.2f}s"
        )


class TestHAlphaAnalyticSuite:
    def test_trivial_cases_exact(self):
        H, a = h_alpha(Herm2(1.0, 0.0, 0.0))
        assert abs(H - 0.0) <= 1e-12 and abs(a - 0.0) <= 1e-12
        H, a = h_alpha(Herm2(1.0, 1.0, 0.0))
        assert abs(H - 1.0) <= 1e-12 and abs(a - 45.0) <= 1e-12
        H, a = h_alpha(Herm2(0.0, 1.0, 0.0))
        assert abs(H - 0.0) <= 1e-12 and abs(a - 90.0) <= 1e-12
        _report("H/alpha analytic suite: trivial cases exact to 1e-12")

    def test_oracle_case(self):
        # frozen from the independent numpy.linalg.eigh oracle
        H, a = h_alpha(Herm2(2.0, 1.0, 1.0))
        assert abs(H - 0.5500477595827573) <= 1e-9
        assert abs(a - 35.099789957048806) <= 1e-9
        _report("H/alpha analytic suite: [[2,1],[1,1]] matches eigensolver oracle")


class TestInvariances:
    N = 10_000

    def test_h_alpha_scale_invariance(self):
        c11, c22, c12 = _random_psd_arrays(self.N, seed=11)
        rng = np.random.default_rng(12)
        scales = rng.uniform(1e-6, 1e6, size=self.N)
        worst_h = worst_a = 0.0
        for i in range(self.N):
            H0, a0 = h_alpha(Herm2(c11[i], c22[i], c12[i]))
            H1, a1 = h_alpha(
                Herm2(scales[i] * c11[i], scales[i] * c22[i], scales[i] * c12[i])
            )
            worst_h = max(worst_h, abs(H1 - H0))
            worst_a = max(worst_a, abs(a1 - a0))
        assert worst_h <= 1e-9 and worst_a <= 1e-9
        _report(
            f"scale invariance on {self.N} samples: max |dH|={worst_h:.2e}, "
            f"max |dalpha|={worst_a:.2e} deg"
        )

    def test_wishart_unitary_congruence(self):
        c11, c22, c12 = _random_psd_arrays(self.N, seed=21)
        v11, v22, v12 = _random_psd_arrays(self.N, seed=22)
        # keep centers invertible
        v11 = v11 + 0.1
        v22 = v22 + 0.1
        u = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        worst = 0.0
        for i in range(self.N):
            c = np.array([[c11[i], c12[i]], [np.conj(c12[i]), c22[i]]])
            v = np.array([[v11[i], v12[i]], [np.conj(v12[i]), v22[i]]])
            d0 = wishart_distance(Herm2.from_array(c), Herm2.from_array(v))
            d1 = wishart_distance(
                Herm2.from_array(u @ c @ u.conj().T),
                Herm2.from_array(u @ v @ u.conj().T),
            )
            worst = max(worst, abs(d1 - d0) / max(abs(d0), 1.0))
        assert worst <= 1e-9
        _report(f"Wishart unitary congruence on {self.N} samples: max rel dev {worst:.2e}")


class TestObjectiveMonotonicity:
    def test_twenty_seeded_fields(self):
        violations = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            hh = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
            vv = 0.4 * hh + rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
            from polsarkit.types import SlcImage

            cov = compute_covariance(SlcImage(hh=hh, vv=vv), window=3, basis="pauli")
            init = np.random.default_rng(500 + seed).integers(
                0, 5, size=(64, 64)
            ).astype(np.uint8)
            _, log = wishart_iterate(cov, init, max_iter=15, change_tol=1e-9)
            objectives = [e["objective"] for e in log]
            for a, b in zip(objectives, objectives[1:]):
                if b > a + 1e-9 * abs(a):
                    violations += 1
        assert violations == 0
        _report("Wishart objective monotone on 20 seeded 64x64 fields, 0 violations")


class TestSimulationFidelity:
    def test_sample_covariance_within_two_percent(self):
        for cls in default_presets():
            spec = SceneSpec(
                height=320, width=320, seed=1000 + hash(cls.name) % 100,
                classes=[cls, cls], layout="stripes",
            )
            slc, _ = generate_scene(spec)
            hh = slc.hh.astype(np.complex128).ravel()
            vv = slc.vv.astype(np.complex128).ravel()
            assert hh.size >= 100_000
            sample = np.array(
                [
                    [np.mean(np.abs(hh) ** 2), np.mean(hh * np.conj(vv))],
                    [np.mean(vv * np.conj(hh)), np.mean(np.abs(vv) ** 2)],
                ]
            )
            true = analytic_truth(cls)["C2"]
            power_scale = np.sqrt(cls.sigma_hh * cls.sigma_vv)
            for i in range(2):
                for j in range(2):
                    scale = max(abs(true[i][j]), power_scale)
                    err = abs(sample[i, j] - true[i][j])
                    assert err <= 0.02 * scale, (
                        f"{cls.name} entry ({i},{j}): err {err:.3e} vs "
                        f"2% of {scale:.3e}"
                    )
        _report("simulation fidelity: 1e5-pixel sample covariance within 2% per entry")

    def test_window7_halpha_convergence(self):
        for cls in default_presets():
            spec = SceneSpec(
                height=128, width=128, seed=41, classes=[cls, cls], layout="stripes"
            )
            slc, _ = generate_scene(spec)
            cov = compute_covariance(slc, window=7, basis="pauli")
            f = h_alpha_field(cov)
            t = analytic_truth(cls)
            h_err = abs(float(f.H[8:-8, 8:-8].mean()) - t["H"])
            a_err = abs(float(f.alpha[8:-8, 8:-8].mean()) - t["alpha"])
            assert h_err < 0.05, f"{cls.name}: H off by {h_err:.3f}"
            assert a_err < 3.0, f"{cls.name}: alpha off by {a_err:.2f} deg"
        _report("simulation fidelity: window-7 H within 0.05 and alpha within 3 deg")


class TestEndToEndClassification:
    def test_pipeline_vs_ml_upper_bound(self, tmp_path):
        config = {
            "scene": {
                "height": 512, "width": 512, "classes": "presets",
                "layout": "stripes", "seed": 7,
            },
            "window": 7,
            "wishart": {"max_iter": 20, "change_tol": 0.001, "span_bins": 3},
            "tile": {"size": 256, "stride": 256, "min_labeled_fraction": 0.0},
            "split": {"val_ratio": 0.25, "seed": 1},
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config))
        out = tmp_path / "run"

        start = time.perf_counter()
        assert main(["pipeline", "--config", str(cfg_path), "--out", str(out)]) == 0
        elapsed = time.perf_counter() - start

        truth = pfr.load_class_map(out / "truth.pfr")
        merged = pfr.load_class_map(out / "classes.pfr")
        m = metrics(confusion(merged, truth))
        oa, kappa = m["overall_accuracy"], m["kappa"]

        # brute-force per-pixel maximum-likelihood assignment against the
        # true class covariances, computed here with dense linear algebra
        slc = pfr.load_slc(out / "slc.pfr")
        cov = compute_covariance(slc, window=7, basis="lexicographic")
        dists = []
        for cls in default_presets():
            v = np.asarray(analytic_truth(cls)["C2"], dtype=complex)
            v_inv = np.linalg.inv(v)
            logdet = float(np.log(np.linalg.det(v).real))
            tr = (
                v_inv[0, 0].real * cov.c11
                + v_inv[1, 1].real * cov.c22
                + 2.0 * (v_inv[1, 0] * cov.c12).real
            )
            dists.append(logdet + tr)
        ml_labels = np.argmin(np.stack(dists), axis=0).astype(np.uint8)
        ml = metrics(
            confusion(
                ClassMap(labels=ml_labels, class_names=truth.class_names), truth
            )
        )
        ml_oa = ml["overall_accuracy"]

        assert oa >= 0.85, f"pipeline OA {oa:.4f} < 0.85"
        assert kappa >= 0.80, f"pipeline kappa {kappa:.4f} < 0.80"
        assert oa >= 0.9 * ml_oa, (
            f"pipeline OA {oa:.4f} < 0.9 x ML bound {ml_oa:.4f}"
        )
        assert elapsed < 30.0, f"pipeline took {elapsed:.1f}s"
        _report(
            f"end-to-end classification: OA={oa:.4f} kappa={kappa:.4f} "
            f"ML bound={ml_oa:.4f} ({elapsed:.1f}s)"
        )


class TestDeterminism:
    CONFIG = {
        "scene": {
            "height": 96, "width": 96, "classes": "presets",
            "layout": "rectangles", "seed": 5,
        },
        "window": 5,
        "wishart": {"max_iter": 6, "change_tol": 0.001},
        "tile": {"size": 32, "stride": 32, "min_labeled_fraction": 0.0},
        "split": {"val_ratio": 0.25, "seed": 2},
    }

    @staticmethod
    def _hashes(root):
        return {
            str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }

    def test_reruns_and_threads_byte_identical(self, tmp_path):
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(self.CONFIG))
        outs = []
        for name, threads in (("a", None), ("b", None), ("c", 4)):
            out = tmp_path / name
            argv = ["pipeline", "--config", str(cfg_path), "--out", str(out)]
            if threads:
                argv = ["--threads", str(threads)] + argv
            assert main(argv) == 0
            outs.append(self._hashes(out))
        assert outs[0] == outs[1], "rerun changed artifact bytes"
        for h in (outs[0], outs[2]):
            h.pop("run_log.json")  # records the thread cap by design
        assert outs[0] == outs[2], "--threads changed artifact bytes"
        _report("determinism: reruns and --threads byte-identical artifacts")
