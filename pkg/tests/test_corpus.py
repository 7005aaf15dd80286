import json

import numpy as np
import pytest

from serforge.corpus import (
    CorpusSpec,
    LabeledUtterance,
    generate_noise_source,
    generate_synthetic_corpus,
    load_labeled_corpus,
    map_label,
    save_manifest,
    split_speaker_independent,
)
from serforge.audio import Waveform, save_wav
from serforge.errors import DataError, TooFewSpeakers, UnknownLabel


def test_map_label_table_entries():
    assert map_label("sadness", "iemocap") == "negative"
    assert map_label("happiness", "iemocap") == "positive"
    assert map_label("neutral", "iemocap") == "positive"
    assert map_label("motherese", "fau_aibo") == "positive"
    assert map_label("emphatic", "fau_aibo") == "negative"
    assert map_label("Angry", "fau_aibo") == "negative"  # case-insensitive


def test_map_label_unknown():
    with pytest.raises(UnknownLabel):
        map_label("surprise", "iemocap")
    with pytest.raises(UnknownLabel):
        map_label("frustration", "iemocap")


def test_map_label_bad_scheme():
    with pytest.raises(ValueError):
        map_label("neutral", "ravdess")


def _small_spec(seed=0):
    return CorpusSpec(
        num_speakers=3, utterances_per_speaker=4, duration_s=1.0, seed=seed
    )


def test_corpus_deterministic():
    a = generate_synthetic_corpus(_small_spec())
    b = generate_synthetic_corpus(_small_spec())
    assert len(a) == len(b) == 12
    for ua, ub in zip(a, b):
        assert np.array_equal(ua.waveform.samples, ub.waveform.samples)
        assert (ua.label, ua.speaker_id) == (ub.label, ub.speaker_id)


def test_corpus_class_balance_exact():
    corpus = generate_synthetic_corpus(_small_spec())
    for speaker in {u.speaker_id for u in corpus}:
        labels = [u.label for u in corpus if u.speaker_id == speaker]
        assert labels.count("positive") == labels.count("negative")


def test_noise_source_deterministic():
    a = generate_noise_source("cafe", 2.0, 7)
    b = generate_noise_source("cafe", 2.0, 7)
    assert np.array_equal(a.audio.samples, b.audio.samples)


def _band_power_fraction(wave, cutoff_hz):
    spec = np.abs(np.fft.rfft(wave.samples)) ** 2
    freqs = np.fft.rfftfreq(len(wave), 1.0 / wave.sample_rate)
    return spec[freqs < cutoff_hz].sum() / spec.sum()


def test_station_power_concentrated_low():
    src = generate_noise_source("station", 5.0, 0)
    assert _band_power_fraction(src.audio, 500.0) >= 0.6


def test_cafe_station_centroids_differ():
    def centroid(wave):
        mag = np.abs(np.fft.rfft(wave.samples))
        freqs = np.fft.rfftfreq(len(wave), 1.0 / wave.sample_rate)
        return (mag * freqs).sum() / mag.sum()

    cafe = generate_noise_source("cafe", 5.0, 1)
    station = generate_noise_source("station", 5.0, 1)
    assert centroid(cafe.audio) - centroid(station.audio) >= 300.0


def test_noise_sources_stationary():
    sr = 16000
    for kind in ("cafe", "meeting", "station"):
        src = generate_noise_source(kind, 6.0, 3)
        windows = src.audio.samples[: 6 * sr].reshape(6, sr)
        variances = windows.var(axis=1)
        assert variances.max() / variances.min() < 3.0


def test_split_speaker_disjoint_many_seeds():
    spec = CorpusSpec(num_speakers=5, utterances_per_speaker=2, duration_s=0.5)
    corpus = generate_synthetic_corpus(spec)
    for seed in range(100):
        train, eval_set, test = split_speaker_independent(corpus, seed)
        groups = [
            {u.speaker_id for u in part} for part in (train, eval_set, test)
        ]
        assert not (groups[0] & groups[1])
        assert not (groups[0] & groups[2])
        assert not (groups[1] & groups[2])
        assert len(groups[0]) == 3 and len(groups[1]) == 1 and len(groups[2]) == 1
        assert len(train) + len(eval_set) + len(test) == len(corpus)


def test_split_too_few_speakers():
    spec = CorpusSpec(num_speakers=2, utterances_per_speaker=2, duration_s=0.5)
    with pytest.raises(TooFewSpeakers):
        split_speaker_independent(generate_synthetic_corpus(spec), 0)


def test_load_labeled_corpus(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(2):
        save_wav(
            Waveform(rng.uniform(-0.5, 0.5, 800), 16000), tmp_path / f"u{i}.wav"
        )
    csv = tmp_path / "labels.csv"
    csv.write_text(
        "path,raw_label,speaker_id\nu0.wav,happiness,s1\nu1.wav,anger,s2\n"
    )
    utterances = load_labeled_corpus(csv, "iemocap")
    assert [u.label for u in utterances] == ["positive", "negative"]
    assert [u.speaker_id for u in utterances] == ["s1", "s2"]


def test_load_labeled_corpus_bad_header(tmp_path):
    csv = tmp_path / "labels.csv"
    csv.write_text("file,emotion\nx.wav,anger\n")
    with pytest.raises(DataError):
        load_labeled_corpus(csv, "iemocap")


def test_manifest(tmp_path):
    corpus = generate_synthetic_corpus(_small_spec())
    path = tmp_path / "manifest.json"
    save_manifest(corpus, path)
    data = json.loads(path.read_text())
    assert data["format"] == "serforge-manifest-v1"
    assert len(data["utterances"]) == len(corpus)
    assert all(r["provenance"] == "clean" for r in data["utterances"])


def test_labeled_utterance_validation():
    wave = Waveform(np.zeros(10) + 0.1, 16000)
    with pytest.raises(ValueError):
        LabeledUtterance(wave, "joyful", "s1")
