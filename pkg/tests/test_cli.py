import numpy as np
import pytest

from mvembed.cli import main
from mvembed.evalkit import eval_sts, load_sts_tsv
from mvembed.model import SentenceEncoder
from mvembed.checkpoint import load_checkpoint
from mvembed.synthetic import write_clustered_corpus
from mvembed.wordvec import load_vectors


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus.txt"
    vectors = root / "vectors.txt"
    write_clustered_corpus(
        corpus,
        vectors,
        n_clusters=3,
        sentences_per_cluster=12,
        vocab_per_cluster=24,
        word_dim=8,
        sentence_len=3,
        seed=5,
    )
    return root


TRAIN_FLAGS = ["--n", "4", "--d", "4", "--c", "1", "--word-dim", "8",
               "--max-iters", "10", "--log-every", "5", "--seed", "3"]


@pytest.fixture(scope="module")
def checkpoint(workdir):
    out = workdir / "run"
    rc = main(["train", "--corpus", str(workdir / "corpus.txt"),
               "--vectors", str(workdir / "vectors.txt"),
               "--out", str(out), *TRAIN_FLAGS])
    assert rc == 0
    return out / "checkpoint.mvck"


def test_train_cli_writes_outputs(checkpoint, workdir):
    assert checkpoint.exists()
    assert (workdir / "run" / "diagnostics.csv").exists()


def test_train_cli_empty_corpus_fails(workdir, tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("", encoding="utf-8")
    rc = main(["train", "--corpus", str(empty), "--vectors", str(workdir / "vectors.txt"),
               "--out", str(tmp_path / "run"), *TRAIN_FLAGS])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_config_file_with_flag_overrides(workdir, tmp_path, capsys):
    cfg = tmp_path / "train.cfg"
    cfg.write_text(
        "# desk-scale run\n"
        f"corpus={workdir / 'corpus.txt'}\n"
        f"vectors={workdir / 'vectors.txt'}\n"
        "n=4\nd=4\nc=1\nword_dim=8\nmax_iters=4\nlog_every=2\nseed=3\n",
        encoding="utf-8",
    )
    out = tmp_path / "run"
    rc = main(["train", "--config", str(cfg), "--out", str(out), "--max-iters", "6"])
    assert rc == 0
    lines = (out / "diagnostics.csv").read_text().splitlines()
    assert lines[-1].startswith("6,")  # flag override beat the file value


def test_config_file_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("corpus=x\nvectors=y\nbogus_key=1\n", encoding="utf-8")
    rc = main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "bogus_key" in capsys.readouterr().err


# ---------------------------------------------------------------------
# encode
# ---------------------------------------------------------------------


def _sentences_file(workdir, name="inputs.txt"):
    path = workdir / name
    docs = (workdir / "corpus.txt").read_text().splitlines()
    chosen = [l for l in docs if l.strip()][:6]
    path.write_text("\n".join(chosen) + "\n", encoding="utf-8")
    return path


def test_encode_unsupervised_row_width(checkpoint, workdir, tmp_path):
    inputs = _sentences_file(workdir)
    out = tmp_path / "vecs.txt"
    rc = main(["encode", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
               "--input", str(inputs), "--out", str(out), "--mode", "unsupervised"])
    assert rc == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 6
    assert all(len(r.split()) == 8 for r in rows)  # 2d with d=4


def test_encode_supervised_row_width(checkpoint, workdir, tmp_path):
    inputs = _sentences_file(workdir)
    out = tmp_path / "vecs.txt"
    rc = main(["encode", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
               "--input", str(inputs), "--out", str(out), "--mode", "supervised"])
    assert rc == 0
    rows = out.read_text().splitlines()
    assert all(len(r.split()) == 56 for r in rows)  # 14d with d=4


def test_encode_twice_identical_bytes(checkpoint, workdir, tmp_path):
    inputs = _sentences_file(workdir)
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for out in (a, b):
        rc = main(["encode", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
                   "--input", str(inputs), "--out", str(out)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


def test_encode_single_sentence_needs_population(checkpoint, workdir, tmp_path, capsys):
    single = tmp_path / "one.txt"
    single.write_text("c0w1 c0w2\n", encoding="utf-8")
    rc = main(["encode", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
               "--input", str(single), "--out", str(tmp_path / "o.txt")])
    assert rc == 1


def test_encode_blank_line_is_format_error(checkpoint, workdir, tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("c0w1 c0w2\n\nc0w3 c0w4\n", encoding="utf-8")
    rc = main(["encode", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
               "--input", str(bad), "--out", str(tmp_path / "o.txt")])
    assert rc == 1
    assert "line 2" in capsys.readouterr().err


def test_encode_threads_env_does_not_change_output(checkpoint, workdir, tmp_path, monkeypatch):
    inputs = _sentences_file(workdir)
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    monkeypatch.setenv("MVEMBED_THREADS", "1")
    assert main(["encode", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
                 "--input", str(inputs), "--out", str(a)]) == 0
    monkeypatch.setenv("MVEMBED_THREADS", "3")
    assert main(["encode", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
                 "--input", str(inputs), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------
# eval-sts
# ---------------------------------------------------------------------


def _tsv(workdir, tmp_path):
    lines = [l for l in (workdir / "corpus.txt").read_text().splitlines() if l.strip()]
    path = tmp_path / "pairs.tsv"
    rows = []
    for i in range(10):
        rows.append(f"{lines[i]}\t{lines[i + 1]}\t{(i % 6):.1f}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def test_eval_sts_cli_matches_library(checkpoint, workdir, tmp_path, capsys):
    tsv = _tsv(workdir, tmp_path)
    rc = main(["eval-sts", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
               "--tsv", str(tsv), "--dataset-name", "toy", "--seed", "5"])
    assert rc == 0
    out = capsys.readouterr().out

    model, _ = load_checkpoint(checkpoint)
    table = load_vectors(workdir / "vectors.txt", model.word_dim)
    report = eval_sts(SentenceEncoder(model, table), load_sts_tsv(tsv), dataset_name="toy", seed=5)
    assert report.record() in out
    assert "pearson" in out


def test_eval_sts_cli_malformed_tsv_names_line(checkpoint, workdir, tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\t1.0\nonly two\tcolumns\n", encoding="utf-8")
    rc = main(["eval-sts", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
               "--tsv", str(bad)])
    assert rc == 1
    assert "line 2" in capsys.readouterr().err


def test_eval_sts_missing_view_guard(workdir, tmp_path, capsys):
    out = tmp_path / "frun"
    rc = main(["train", "--corpus", str(workdir / "corpus.txt"),
               "--vectors", str(workdir / "vectors.txt"), "--out", str(out),
               "--views", "f", *TRAIN_FLAGS])
    assert rc == 0
    tsv = _tsv(workdir, tmp_path)
    rc = main(["eval-sts", "--checkpoint", str(out / "checkpoint.mvck"),
               "--vectors", str(workdir / "vectors.txt"), "--tsv", str(tsv), "--repr", "g"])
    assert rc == 1
    assert "no 'g' view" in capsys.readouterr().err
    rc = main(["eval-sts", "--checkpoint", str(out / "checkpoint.mvck"),
               "--vectors", str(workdir / "vectors.txt"), "--tsv", str(tsv), "--repr", "ensemble"])
    assert rc == 1


def test_eval_sts_single_view_repr_works(checkpoint, workdir, tmp_path):
    tsv = _tsv(workdir, tmp_path)
    rc = main(["eval-sts", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
               "--tsv", str(tsv), "--repr", "f"])
    assert rc == 0


# ---------------------------------------------------------------------
# nn
# ---------------------------------------------------------------------


def test_nn_cli_self_retrieval(checkpoint, workdir, tmp_path, capsys):
    inputs = _sentences_file(workdir)
    query = inputs.read_text().splitlines()[2]
    rc = main(["nn", "--checkpoint", str(checkpoint), "--vectors", str(workdir / "vectors.txt"),
               "--sentences", str(inputs), "--query", query, "-k", "3"])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == f"query: {query}"
    assert out[1].strip().endswith(query)


# ---------------------------------------------------------------------
# ablate
# ---------------------------------------------------------------------


def test_ablate_cli_grid(workdir, tmp_path, capsys):
    out = tmp_path / "abl"
    rc = main(["ablate", "--corpus", str(workdir / "corpus.txt"),
               "--vectors", str(workdir / "vectors.txt"), "--out", str(out),
               "--grid", "fg:cross,g", *TRAIN_FLAGS])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "fg" in printed and "single" in printed
    summary = (out / "ablation_summary.csv").read_text().splitlines()
    assert len(summary) == 3  # header + 2 rows


# ---------------------------------------------------------------------
# inspect
# ---------------------------------------------------------------------


def test_inspect_prints_both_parameter_counts(checkpoint, capsys):
    rc = main(["inspect", "--checkpoint", str(checkpoint)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "view_config: fg" in out
    assert "d: 4" in out
    # exact: 2*(3*4*8 + 3*16 + 3*4) per direction-pair + W_g 8*8 + tau
    exact = 2 * (3 * 4 * 8 + 3 * 16 + 3 * 4) + 8 * 8 + 1
    assert f"parameters_exact: {exact:,}" in out
    formula = 12 * 16 + 600 * 4
    assert f"parameters_headline_formula: {formula:,}" in out


def test_inspect_unreadable_checkpoint(tmp_path, capsys):
    missing = tmp_path / "nope.mvck"
    rc = main(["inspect", "--checkpoint", str(missing)])
    assert rc == 1
