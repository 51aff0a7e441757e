"""Synthetic datasets: determinism, label validity, replay oracles, PGM/PPM."""

import numpy as np
import pytest

from wingraph.data import (
    Disc,
    blob_discs,
    checker_labels,
    class_palette,
    load_pgm,
    load_ppm,
    paint_discs,
    save_pgm,
    save_ppm,
    stripe_labels,
    synth_dataset,
)


class TestStripes:
    def test_binary_stripes_alternate(self):
        labels = stripe_labels(8, 4, 2, phase=0)
        assert np.array_equal(labels[:, 0], [0, 0, 1, 1, 0, 0, 1, 1])
        assert (labels == labels[:, :1]).all()  # constant along rows

    def test_all_classes_present(self):
        for phase in range(8):
            assert set(np.unique(stripe_labels(8, 8, 3, phase))) == {0, 1, 2}

    def test_deterministic_dataset(self):
        a = synth_dataset("stripes", 3, 8, 8, 3, seed=42)
        b = synth_dataset("stripes", 3, 8, 8, 3, seed=42)
        for (ia, la), (ib, lb) in zip(a, b):
            assert np.array_equal(ia.data, ib.data)
            assert np.array_equal(la, lb)

    def test_different_seeds_differ(self):
        a = synth_dataset("stripes", 2, 8, 8, 3, seed=0)
        b = synth_dataset("stripes", 2, 8, 8, 3, seed=1)
        assert any(not np.array_equal(ia.data, ib.data) for (ia, _), (ib, _) in zip(a, b))


class TestBlobs:
    def test_replay_oracle_matches_painted_labels(self):
        # replay the sampling stream and rasterise per pixel, later discs
        # overwriting earlier ones
        from wingraph.data import render_image

        h, w, ncls, seed = 10, 12, 3, 7
        samples = synth_dataset("blobs", 2, h, w, ncls, seed)
        replay = np.random.default_rng(seed)
        for _, labels in samples:
            discs = blob_discs(h, w, ncls, replay)
            expected = np.zeros((h, w), dtype=np.int64)
            for disc in discs:
                for y in range(h):
                    for x in range(w):
                        if (y + 0.5 - disc.cy) ** 2 + (x + 0.5 - disc.cx) ** 2 <= disc.radius ** 2:
                            expected[y, x] = disc.class_id
            assert np.array_equal(labels, expected)
            render_image(expected, ncls, replay)  # keep the replay stream in sync

    def test_histogram_matches_paint_counts(self):
        h, w, ncls = 9, 9, 4
        rng = np.random.default_rng(3)
        discs = blob_discs(h, w, ncls, rng)
        labels = paint_discs(h, w, discs)
        hist = np.bincount(labels.reshape(-1), minlength=ncls)
        assert hist.sum() == h * w
        # every non-background class got at least one disc by construction
        assert all(any(d.class_id == c for d in discs) for c in range(1, ncls))

    def test_later_discs_overwrite(self):
        discs = [Disc(2.0, 2.0, 2.0, 1), Disc(2.0, 2.0, 1.0, 2)]
        labels = paint_discs(5, 5, discs)
        assert labels[2, 2] == 2
        assert labels[0, 2] == 1


class TestChecker:
    def test_cells_cycle_classes(self):
        labels = checker_labels(8, 8, 3)
        assert labels[0, 0] == 0
        assert labels[0, 2] == 1
        assert labels[2, 2] == 2
        assert set(np.unique(labels)) == {0, 1, 2}


class TestRendering:
    def test_palette_distinct_first_channel(self):
        palette = class_palette(5)
        assert len(set(palette[:, 0])) == 5

    def test_label_ids_always_valid(self):
        for kind in ("stripes", "blobs", "checker"):
            for _, labels in synth_dataset(kind, 3, 8, 8, 3, seed=11):
                assert labels.min() >= 0 and labels.max() < 3

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown dataset kind"):
            synth_dataset("noise", 1, 8, 8, 2, 0)


class TestNetpbm:
    def test_ppm_roundtrip_quantised(self, tmp_path):
        rng = np.random.default_rng(0)
        image = rng.uniform(0, 1, (3, 6, 5))
        path = tmp_path / "img.ppm"
        save_ppm(path, image)
        loaded = load_ppm(path)
        assert loaded.shape == (3, 6, 5)
        assert np.abs(loaded - image).max() <= 0.5 / 255 + 1e-12

    def test_pgm_roundtrip_exact(self, tmp_path):
        labels = np.random.default_rng(1).integers(0, 5, (7, 4))
        path = tmp_path / "labels.pgm"
        save_pgm(path, labels)
        assert np.array_equal(load_pgm(path), labels)

    def test_pgm_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P3\n1 1\n255\n0")
        with pytest.raises(ValueError, match="expected P5"):
            load_pgm(path)

    def test_pgm_truncated_body(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + b"\x00" * 7)
        with pytest.raises(ValueError, match="truncated"):
            load_pgm(path)

    def test_comment_lines_tolerated(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# made by hand\n2 2\n255\n\x00\x01\x02\x03")
        assert np.array_equal(load_pgm(path), [[0, 1], [2, 3]])
