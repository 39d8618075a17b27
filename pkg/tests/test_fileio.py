"""CSV and PGM round-trip tests."""

import numpy as np
import pytest

from modeseek import InputError
from modeseek.fileio import (
    read_labels_csv,
    read_pgm,
    read_points_csv,
    write_labels_csv,
    write_pgm,
    write_points_csv,
)


class TestCsv:
    def test_points_round_trip(self, tmp_path):
        X = np.array([[1.25, -3.0], [0.1, 2.0 / 3.0]])
        p = tmp_path / "pts.csv"
        write_points_csv(p, X)
        assert np.array_equal(read_points_csv(p), X)

    def test_comments_and_single_column(self, tmp_path):
        p = tmp_path / "pts.csv"
        p.write_text("# header comment\n1.5\n# mid comment\n2.5\n")
        X = read_points_csv(p)
        assert X.shape == (2, 1)
        assert X.ravel() == pytest.approx([1.5, 2.5])

    def test_labels_round_trip(self, tmp_path):
        p = tmp_path / "labels.csv"
        write_labels_csv(p, np.array([0, 1, 1, 2]))
        assert np.array_equal(read_labels_csv(p), np.array([0, 1, 1, 2]))

    def test_malformed_raises_input_error(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1.0,2.0\nfoo,3.0\n")
        with pytest.raises(InputError):
            read_points_csv(p)


class TestPgm:
    def test_ascii_round_trip(self, tmp_path):
        img = np.array([[0, 3], [2, 1]], dtype=np.int64)
        p = tmp_path / "img.pgm"
        write_pgm(p, img, maxval=3)
        back, maxval = read_pgm(p)
        assert np.array_equal(back, img)
        assert maxval == 3

    def test_reads_p2_with_comments(self, tmp_path):
        p = tmp_path / "c.pgm"
        p.write_text("P2\n# a comment\n3 2\n# another\n255\n0 10 20\n30 40 50\n")
        img, maxval = read_pgm(p)
        assert img.shape == (2, 3)
        assert img[1, 2] == 50
        assert maxval == 255

    def test_reads_p5_binary(self, tmp_path):
        p = tmp_path / "b.pgm"
        payload = bytes([0, 100, 200, 255, 1, 2])
        p.write_bytes(b"P5\n3 2\n255\n" + payload)
        img, maxval = read_pgm(p)
        assert img.shape == (2, 3)
        assert img[0, 1] == 100
        assert img[1, 0] == 255

    def test_reads_16bit_p5(self, tmp_path):
        p = tmp_path / "w.pgm"
        data = np.array([[300, 5]], dtype=">u2").tobytes()
        p.write_bytes(b"P5\n2 1\n1000\n" + data)
        img, maxval = read_pgm(p)
        assert img[0, 0] == 300
        assert maxval == 1000

    def test_single_label_maxval_floored_to_one(self, tmp_path):
        p = tmp_path / "flat.pgm"
        write_pgm(p, np.zeros((2, 2), dtype=np.int64), maxval=0)
        img, maxval = read_pgm(p)
        assert maxval == 1
        assert img.max() == 0

    def test_rejects_non_pgm(self, tmp_path):
        p = tmp_path / "x.pgm"
        p.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(InputError):
            read_pgm(p)

    def test_rejects_truncated(self, tmp_path):
        p = tmp_path / "t.pgm"
        p.write_bytes(b"P2\n2 2\n255\n1 2 3")
        with pytest.raises(InputError):
            read_pgm(p)
