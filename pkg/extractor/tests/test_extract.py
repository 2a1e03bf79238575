import math

import numpy as np
import pytest

from stmine_extractor.audio import AudioDecodeError, load_wav, write_wav
from stmine_extractor.baf import BafError, read_baf, write_baf, KIND_LOGITS
from stmine_extractor.extract import ExtractorJob, extract, extract_many
from stmine_extractor.models import CTC_TOKENS, ExtractorConfig, ModelBundle, ModelLoadError


def tone(seconds=1.0, rate=16000, freq=440.0, amp=0.5):
    t = np.arange(int(seconds * rate)) / rate
    return (amp * np.sin(2 * math.pi * freq * t)).astype(np.float32)


@pytest.fixture(scope="module")
def bundle():
    return ModelBundle(ExtractorConfig())


class TestAudio:
    def test_mono_16k_passthrough(self, tmp_path):
        path = tmp_path / "a.wav"
        write_wav(path, tone())
        samples = load_wav(path)
        assert samples.dtype == np.float32
        assert abs(len(samples) - 16000) <= 1

    def test_stereo_44k_normalized(self, tmp_path):
        rate = 44100
        mono = tone(seconds=0.5, rate=rate)
        stereo = np.stack([mono, mono], axis=1).ravel()
        path = tmp_path / "s.wav"
        write_wav(path, stereo, rate=rate, channels=2)
        samples = load_wav(path)
        assert abs(len(samples) - 8000) <= 8  # resampled to 16 kHz

    def test_unreadable_raises_decode_error(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"not audio at all")
        with pytest.raises(AudioDecodeError):
            load_wav(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(AudioDecodeError):
            load_wav(tmp_path / "nope.wav")


class TestVad:
    def test_silence_scores_below_half(self, tmp_path, bundle):
        path = tmp_path / "silence.wav"
        write_wav(path, np.zeros(16000, dtype=np.float32))
        job = ExtractorJob(audio_path=path, doc_id="sil", out_dir=tmp_path / "out", kinds=("vad",))
        [vad_path] = extract(job, bundle=bundle)
        kind, probs, frame_seconds = read_baf(vad_path)
        assert probs.shape[0] == math.ceil(1.0 / frame_seconds)
        assert float(probs.max()) < 0.5

    def test_loud_tone_scores_above_half(self, tmp_path, bundle):
        path = tmp_path / "tone.wav"
        write_wav(path, tone(amp=0.5))
        job = ExtractorJob(audio_path=path, doc_id="tone", out_dir=tmp_path / "out", kinds=("vad",))
        [vad_path] = extract(job, bundle=bundle)
        _, probs, _ = read_baf(vad_path)
        assert float(probs.mean()) > 0.5


class TestEmbeddings:
    def test_shape_contract(self, tmp_path, bundle):
        path = tmp_path / "a.wav"
        write_wav(path, tone(seconds=0.2))
        job = ExtractorJob(
            audio_path=path, doc_id="d", out_dir=tmp_path / "out", kinds=("emb",), texts=("hello",)
        )
        [emb_path] = extract(job, bundle=bundle)
        kind, data, frame_seconds = read_baf(emb_path)
        assert data.shape[0] == 1
        assert frame_seconds == 0.0

    def test_rows_follow_texts(self, tmp_path, bundle):
        path = tmp_path / "a.wav"
        write_wav(path, tone(seconds=0.2))
        job = ExtractorJob(
            audio_path=path, doc_id="d", out_dir=tmp_path / "out", kinds=("emb",),
            texts=("one", "two", "three"),
        )
        [emb_path] = extract(job, bundle=bundle)
        _, data, _ = read_baf(emb_path)
        assert data.shape[0] == 3

    def test_similar_texts_score_higher(self, bundle):
        vecs = bundle.embeddings(["the cat sat on the mat", "the cat sat on a mat", "purely unrelated words"])
        close = float(vecs[0] @ vecs[1])
        far = float(vecs[0] @ vecs[2])
        assert close > far

    def test_requires_texts(self, tmp_path):
        with pytest.raises(ValueError, match="texts"):
            ExtractorJob(audio_path=tmp_path / "a.wav", doc_id="d", out_dir=tmp_path, kinds=("emb",))


class TestLogits:
    def test_rows_normalized(self, tmp_path, bundle):
        path = tmp_path / "a.wav"
        write_wav(path, tone())
        job = ExtractorJob(audio_path=path, doc_id="d", out_dir=tmp_path / "out", kinds=("logits",))
        logits_path, vocab_path = extract(job, bundle=bundle)
        kind, data, frame_seconds = read_baf(logits_path)
        assert kind == KIND_LOGITS
        assert data.shape[1] == len(CTC_TOKENS)
        assert frame_seconds == pytest.approx(0.02, abs=1e-6)
        x = data.astype(np.float64)
        lse = np.log(np.exp(x - x.max(axis=1, keepdims=True)).sum(axis=1)) + x.max(axis=1)
        assert float(np.abs(lse).max()) <= 1e-3

    def test_vocab_written_alongside(self, tmp_path, bundle):
        import json

        path = tmp_path / "a.wav"
        write_wav(path, tone(seconds=0.3))
        job = ExtractorJob(audio_path=path, doc_id="d", out_dir=tmp_path / "out", kinds=("logits",))
        _, vocab_path = extract(job, bundle=bundle)
        obj = json.loads(vocab_path.read_text())
        assert obj["blank_index"] == 0
        assert len(obj["tokens"]) == len(set(obj["tokens"]))


class TestContract:
    def test_decode_error_writes_nothing(self, tmp_path, bundle):
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"garbage")
        out = tmp_path / "out"
        job = ExtractorJob(audio_path=bad, doc_id="bad", out_dir=out, kinds=("logits", "vad"))
        with pytest.raises(AudioDecodeError):
            extract(job, bundle=bundle)
        assert not out.exists() or not list(out.iterdir())

    def test_determinism_byte_identical(self, tmp_path):
        path = tmp_path / "a.wav"
        write_wav(path, tone())
        blobs = []
        for run in range(2):
            out = tmp_path / f"out{run}"
            job = ExtractorJob(
                audio_path=path, doc_id="d", out_dir=out, kinds=("logits", "emb", "vad"),
                texts=("hello world",),
            )
            extract(job, cfg=ExtractorConfig(deterministic=True))
            blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert blobs[0] == blobs[1]

    def test_bad_model_path_is_load_error(self):
        with pytest.raises(ModelLoadError):
            ModelBundle(ExtractorConfig(asr_model="/no/such/model.pt"))

    def test_extract_many_shares_bundle(self, tmp_path):
        paths = []
        for i in range(2):
            p = tmp_path / f"{i}.wav"
            write_wav(p, tone(seconds=0.2, freq=300.0 + i * 100))
            paths.append(p)
        jobs = [
            ExtractorJob(audio_path=p, doc_id=f"doc{i}", out_dir=tmp_path / "out", kinds=("vad",))
            for i, p in enumerate(paths)
        ]
        results = extract_many(jobs)
        assert set(results) == {"doc0", "doc1"}

    def test_baf_writer_rejects_bad_vad(self, tmp_path):
        with pytest.raises(BafError):
            write_baf(tmp_path / "x.baf", 2, np.array([[1.5]], dtype=np.float32), 0.032)
