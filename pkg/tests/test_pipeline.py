import csv
import shutil

import numpy as np
import pytest
from PIL import Image

from leafid.errors import ClassWithNoImages, ConfigError, DimensionMismatch, EmptyDataset, InsufficientImages, NonPositiveSigma
from leafid.features import PRESETS, TABLE2, ExtractionSettings, FeatureConfig, assemble_features, feature_names, parse_configs
from leafid.pipeline import (
    DEFAULT_SIGMAS,
    DatasetManifest,
    Entry,
    ablation_grid,
    cache_path,
    evaluate,
    extract_dataset,
    learning_curve,
    load_cache,
    read_manifest,
    run_split,
    scan_dataset,
    sigma_curve,
    sigma_sweep,
    split_dataset,
    write_ablation_csv,
    write_manifest,
    write_report_csv,
)
from leafid.pnn import train
from leafid.synthetic import ClassSpec, twelve_class_specs, write_dataset

SPECS = [
    ClassSpec("a-round", "ellipse", (60, 140, 50), 3.0),
    ClassSpec("b-lobed", "lobed", (150, 60, 140), 9.0),
    ClassSpec("c-ovate", "ovate", (60, 140, 50), 9.0),
]


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    root = write_dataset(tmp_path_factory.mktemp("data"), SPECS, per_class=8, seed=3, size=64)
    manifest = scan_dataset(root)
    table = extract_dataset(manifest)
    return root, manifest, table


def touch_images(root, layout):
    for label, n in layout.items():
        d = root / label
        d.mkdir(parents=True, exist_ok=True)
        for i in range(n):
            Image.new("RGB", (4, 4)).save(d / f"{i}.png")


class TestDataset:
    def test_scan(self, tmp_path):
        touch_images(tmp_path, {"a": 2, "b": 3})
        (tmp_path / "b" / "notes.txt").write_text("x")
        m = scan_dataset(tmp_path)
        assert len(m) == 5 and m.labels == ["a", "b"]
        assert [e.path for e in m.entries] == sorted(e.path for e in m.entries)
        assert all(e.split == "unassigned" for e in m.entries)

    def test_scan_errors(self, tmp_path):
        with pytest.raises(EmptyDataset):
            scan_dataset(tmp_path)
        touch_images(tmp_path, {"a": 1})
        (tmp_path / "empty").mkdir()
        with pytest.raises(ClassWithNoImages):
            scan_dataset(tmp_path)

    def test_split_protocol(self, tmp_path):
        touch_images(tmp_path, {"x": 50, "y": 50})
        m = scan_dataset(tmp_path)
        s = split_dataset(m, 40, 10, seed=1)
        for label, members in s.by_class().items():
            train_paths = {e.path for e in members if e.split == "train"}
            test_paths = {e.path for e in members if e.split == "test"}
            assert len(train_paths) == 40 and len(test_paths) == 10
            assert not train_paths & test_paths
        assert split_dataset(m, 40, 10, seed=1) == s
        assert split_dataset(m, 40, 10, seed=2) != s
        shuffled = DatasetManifest(tuple(reversed(m.entries)))
        assert split_dataset(shuffled, 40, 10, seed=1) == s

    def test_split_95_of_100(self, tmp_path):
        touch_images(tmp_path, {"x": 100, "y": 100})
        s = split_dataset(scan_dataset(tmp_path), 95, 5, seed=0)
        assert len(s.subset("train")) == 190 and len(s.subset("test")) == 10

    def test_split_insufficient_names_class(self, tmp_path):
        touch_images(tmp_path, {"big": 5, "tiny": 2})
        with pytest.raises(InsufficientImages, match="tiny"):
            split_dataset(scan_dataset(tmp_path), 2, 1, seed=0)

    def test_manifest_round_trip(self, tmp_path):
        touch_images(tmp_path, {"a": 3, "b": 3})
        m = split_dataset(scan_dataset(tmp_path), 2, 1, seed=0)
        write_manifest(m, tmp_path / "m.csv")
        assert read_manifest(tmp_path / "m.csv") == m
        with open(tmp_path / "m.csv", newline="") as fh:
            assert next(csv.reader(fh)) == ["path", "label", "split"]

    def test_manifest_relative_paths_and_errors(self, tmp_path):
        (tmp_path / "m.csv").write_text("path,label\nimg/1.png,a\n")
        m = read_manifest(tmp_path / "m.csv")
        assert m.entries[0].path == str(tmp_path / "img" / "1.png")
        (tmp_path / "bad.csv").write_text("file,species\n1.png,a\n")
        with pytest.raises(ValueError):
            read_manifest(tmp_path / "bad.csv")
        with pytest.raises(ValueError):
            write_manifest(DatasetManifest((Entry("a,b.png", "x"),)), tmp_path / "o.csv")
        with pytest.raises(ValueError):
            DatasetManifest((Entry("p", "a"), Entry("p", "b")))


class TestFeatureConfig:
    @pytest.mark.parametrize(
        "text,length",
        [
            ("pft", 35),
            ("pft+geom", 38),
            ("pft+geom+mean+std+skew+vein1", 48),
            ("best-flavia", 50),
            ("best-foliage", 48),
            ("full", 59),
        ],
    )
    def test_lengths(self, text, length):
        cfg = FeatureConfig.parse(text)
        assert len(cfg) == length == len(feature_names(cfg))

    def test_table2(self):
        assert len(TABLE2) == 12 and parse_configs("table2") == list(TABLE2)
        assert TABLE2[10] == PRESETS["best-flavia"]
        assert [len(c) for c in TABLE2] == [35, 38, 41, 44, 47, 50, 55, 52, 48, 49, 50, 51]

    def test_canonical_order_and_aliases(self):
        assert FeatureConfig.parse("vein2+texture+geometric+pft").name == "pft+geom+glcm+vein2"
        assert [c.name for c in parse_configs("pft; pft+mean")] == ["pft", "pft+mean"]
        for bad in ("pft+hog", "vein7", ""):
            with pytest.raises(ConfigError):
                FeatureConfig.parse(bad)

    def test_assemble(self):
        groups = {"pft": np.arange(35.0), "geom": np.ones(3), "vein": np.array([0.1, 0.2, 0.3, 0.4])}
        v = assemble_features(groups, FeatureConfig.parse("pft+geom+vein2"))
        np.testing.assert_array_equal(v[-2:], [0.1, 0.2])
        assert v.shape == (40,)
        groups["geom"] = np.array([1.0, np.nan, 1.0])
        with pytest.raises(ValueError):
            assemble_features(groups, FeatureConfig.parse("pft+geom"))


class TestEvaluate:
    def model(self):
        return train([[0.0], [1.0]], ["a", "b"], sigma=0.1)

    def test_all_correct(self):
        r = evaluate(self.model(), [[0.0], [0.1], [0.9], [1.0]], ["a", "a", "b", "b"])
        assert r.accuracy == 1.0 and (r.n_t, r.n_r) == (4, 4)

    def test_three_of_four(self):
        r = evaluate(self.model(), [[0.0], [0.8], [0.9], [1.0]], ["a", "a", "b", "b"])
        assert r.accuracy == 0.75
        np.testing.assert_array_equal(r.confusion, [[1, 1], [0, 2]])
        np.testing.assert_array_equal(r.per_class_accuracy, [0.5, 1.0])
        assert r.n_correct.sum() / r.n_t == pytest.approx(r.accuracy, abs=1e-12)

    def test_errors(self):
        with pytest.raises(DimensionMismatch):
            evaluate(self.model(), [[0.0, 1.0]], ["a"])
        with pytest.raises(ValueError):
            evaluate(self.model(), [[0.0]], ["zzz"])


class TestExtraction:
    def test_table_complete(self, small_data):
        _, manifest, table = small_data
        assert set(table.groups) == {e.path for e in manifest.entries}
        assert not table.failures
        x, y = table.matrix(manifest.entries, PRESETS["full"])
        assert x.shape == (24, 59) and np.all(np.isfinite(x))

    def test_parallel_matches_serial(self, small_data):
        _, manifest, table = small_data
        par = extract_dataset(manifest, jobs=2)
        for p in table.groups:
            for g, v in table.groups[p].items():
                np.testing.assert_array_equal(par.groups[p][g], v)

    def test_cache_round_trip(self, small_data, tmp_path):
        _, manifest, table = small_data
        settings = ExtractionSettings()
        extract_dataset(manifest, settings, cache_dir=tmp_path)
        cached = load_cache(cache_path(tmp_path, settings))
        assert len(cached) == len(manifest)
        again = extract_dataset(manifest, settings, cache_dir=tmp_path)
        for p in table.groups:
            for g, v in table.groups[p].items():
                np.testing.assert_array_equal(again.groups[p][g], v)
        assert cache_path(tmp_path, ExtractionSettings(levels=16)) != cache_path(tmp_path, settings)

    def test_failed_images_excluded(self, small_data, tmp_path):
        root, _, _ = small_data
        data = tmp_path / "d"
        shutil.copytree(root, data)
        Image.new("RGB", (32, 32), (128, 128, 128)).save(data / "a-round" / "blank.png")
        (data / "b-lobed" / "broken.png").write_bytes(b"not a png")
        m = scan_dataset(data)
        table = extract_dataset(m)
        assert set(map(str, table.failures)) == {str(data / "a-round" / "blank.png"), str(data / "b-lobed" / "broken.png")}
        assert "NoForeground" in table.failures[str(data / "a-round" / "blank.png")]
        assert "DecodeError" in table.failures[str(data / "b-lobed" / "broken.png")]
        reports = ablation_grid(m, table, [PRESETS["full"]], 5, 3, seed=0)
        assert reports[0].n_t == 9


class TestProtocols:
    def test_run_split_deterministic(self, small_data, tmp_path):
        _, manifest, table = small_data
        split = split_dataset(manifest, 5, 3, seed=4)
        _, r1 = run_split(table, split, PRESETS["full"])
        _, r2 = run_split(table, split, PRESETS["full"])
        write_report_csv([r1], tmp_path / "a.csv")
        write_report_csv([r2], tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        rows = list(csv.reader(open(tmp_path / "a.csv")))
        assert rows[0] == ["config", "class", "n_test", "n_correct", "accuracy"]
        assert len(rows) == 1 + 3 + 1 and rows[-1][1] == "ALL"
        assert rows[-1][4] == f"{r1.accuracy:.6f}"

    def test_order_independence(self, small_data):
        _, manifest, table = small_data
        shuffled = DatasetManifest(tuple(reversed(manifest.entries)))
        t2 = extract_dataset(shuffled)
        a = ablation_grid(manifest, table, TABLE2[:3], 5, 3, seed=2)
        b = ablation_grid(shuffled, t2, TABLE2[:3], 5, 3, seed=2)
        for ra, rb in zip(a, b):
            np.testing.assert_array_equal(ra.confusion, rb.confusion)

    def test_ablation_rows(self, small_data, tmp_path):
        _, manifest, table = small_data
        reports = ablation_grid(manifest, table, TABLE2, 5, 3, seed=0)
        write_ablation_csv(reports, tmp_path / "ab.csv")
        rows = list(csv.reader(open(tmp_path / "ab.csv")))
        assert len(rows) == 13
        assert [r[0] for r in rows[1:]] == [c.name for c in TABLE2]
        assert ablation_grid(manifest, table, [FeatureConfig.parse("pft")], 5, 3)[0].config == "pft"

    def test_sigma_sweep(self, small_data):
        _, manifest, table = small_data
        assert 0.05 in DEFAULT_SIGMAS
        curve = sigma_sweep(manifest, table, PRESETS["full"], [0.05], 5, 3)
        assert len(curve) == 1 and curve[0][0] == 0.05
        with pytest.raises(NonPositiveSigma):
            sigma_sweep(manifest, table, PRESETS["full"], [0.05, 0.0], 5, 3)

    def test_sigma_curve_single(self):
        curve = sigma_curve([[0.0], [1.0]], ["a", "b"], [[0.1]], ["a"], [0.05])
        assert curve == [(0.05, 1.0)]

    def test_learning_curve(self, small_data):
        _, manifest, table = small_data
        curve = learning_curve(manifest, table, PRESETS["full"], [2, 5], 3, repeats=2, seed=0)
        assert [s for s, _ in curve] == [2, 5]
        assert all(0 <= a <= 1 for _, a in curve)
        full = learning_curve(manifest, table, PRESETS["full"], [5], 3, repeats=1, seed=7)[0][1]
        _, rep = run_split(table, split_dataset(manifest, 5, 3, seed=7), PRESETS["full"])
        assert full == rep.accuracy
        with pytest.raises(InsufficientImages):
            learning_curve(manifest, table, PRESETS["full"], [7], 3)


def test_twelve_class_specs_distinct():
    specs = twelve_class_specs()
    assert len(specs) == 12 and len({s.name for s in specs}) == 12
