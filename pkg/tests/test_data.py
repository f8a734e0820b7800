import json

import numpy as np
import pytest

from dream import data as dataio
from dream.errors import DataError
from dream.noise import NoiseSpec
from dream.synth import SynthSpec, generate


@pytest.fixture(scope="module")
def clean():
    return generate(SynthSpec(n=80, seed=5))


class TestCorruptDataset:
    def test_test_labels_stay_clean(self, clean):
        noisy = dataio.corrupt_dataset(clean, NoiseSpec("uniform", 0.5, 1))
        np.testing.assert_array_equal(noisy.labels[noisy.test_mask], clean.labels_clean[clean.test_mask])
        assert not noisy.corrupted_mask[noisy.test_mask].any()
        np.testing.assert_array_equal(noisy.labels_clean, clean.labels_clean)

    def test_train_and_val_corrupted(self, clean):
        noisy = dataio.corrupt_dataset(clean, NoiseSpec("pair", 1.0, 1))
        sel = noisy.train_mask | noisy.val_mask
        assert noisy.corrupted_mask[sel].all()
        np.testing.assert_array_equal(noisy.labels[sel], (clean.labels_clean[sel] + 1) % 3)


class TestJson:
    def test_round_trip(self, clean, tmp_path):
        noisy = dataio.corrupt_dataset(clean, NoiseSpec("asymmetric", 0.3, 2))
        path = tmp_path / "g.json"
        dataio.save(noisy, path)
        back = dataio.load(path)
        assert back.graph.edge_list() == noisy.graph.edge_list()
        np.testing.assert_array_equal(back.graph.features, noisy.graph.features)
        np.testing.assert_array_equal(back.labels, noisy.labels)
        np.testing.assert_array_equal(back.corrupted_mask, noisy.corrupted_mask)
        assert back.noise == noisy.noise
        assert dataio.dumps(back) == dataio.dumps(noisy)

    def test_minimal_file(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"num_nodes": 3, "edges": [[0, 1]], "features": [[1.0], [2.0], [3.0]], "labels": [0, 1, -1], "train_mask": [True, True, False]}))
        d = dataio.load(path)
        assert d.graph.num_edges == 1
        assert d.labels.tolist() == [0, 1, -1]
        assert not d.test_mask.any()

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            dataio.load(tmp_path / "none.json")

    def test_unlabeled_node_in_split(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"num_nodes": 2, "edges": [], "features": [[1.0], [2.0]], "labels": [0, -1], "train_mask": [True, True]}))
        with pytest.raises(DataError):
            dataio.load(path)

    def test_bad_edge(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"num_nodes": 2, "edges": [[0, 9]], "features": [[1.0], [2.0]]}))
        with pytest.raises(DataError):
            dataio.load(path)
