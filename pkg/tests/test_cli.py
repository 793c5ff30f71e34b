import numpy as np
import pytest

from glyphcycle import config as config_mod
from glyphcycle.cli import build_parser, main, montage
from glyphcycle.data.dataset import Item, read_manifest, sample_name, scan_style_dir, write_style_dir
from glyphcycle.data.gnt import write_gnt
from glyphcycle.data.pgm import read_pgm
from glyphcycle.data.toy import make_toy_fonts
from glyphcycle.errors import ConfigError
from glyphcycle.metrics import read_metrics

TINY = ["--image-size", "32", "--base-filters", "4", "--transfer-blocks", "1", "--disc-base-filters", "4"]


def write_toy_styles(root, n_glyphs=8, variants=1, seed=0):
    xs, ys = make_toy_fonts(n_glyphs, 32, seed, variants)
    dirs = []
    for name, samples in (("X", xs), ("Y", ys)):
        items = [Item(sample_name(i, s.codepoint), s.array().copy(), s.codepoint) for i, s in enumerate(samples)]
        write_style_dir(root / name, items)
        dirs.append(root / name)
    return dirs


# config


def test_resolved_config_round_trips():
    cfg = config_mod.RunConfig(seed=7, r_a=0.3, r_b=0.3, transfer_kind="densenet", reverse=True, style_a="a b")
    assert config_mod.parse_text(cfg.to_text()) == cfg


def test_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("seed = 5  # from file\nlambda_cycle=3\n\n")
    env = {config_mod.SEED_ENV: "99"}
    assert config_mod.resolve(None, {}, env).seed == 99
    assert config_mod.resolve(str(f), {}, env).seed == 5
    cfg = config_mod.resolve(str(f), {"seed": 8}, env)
    assert cfg.seed == 8 and cfg.lambda_cycle == 3
    assert config_mod.resolve(None, {}, {}).seed == 0


@pytest.mark.parametrize("line", ["colour=blue", "seed", "seed=abc", "reverse=maybe", "preprocess=fancy"])
def test_bad_config_lines(line):
    with pytest.raises(ConfigError):
        config_mod.resolve(None, config_mod.parse_pairs([line]), {})


def test_help_documents_precedence(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train", "--help"])
    out = capsys.readouterr().out
    assert "precedence" in out and config_mod.SEED_ENV in out


def test_unknown_set_key_exits_2(tmp_path, capsys):
    assert main(["ingest", "--input", str(tmp_path), "--output", str(tmp_path / "o"), "--set", "nope=1"]) == 2
    assert "unknown key" in capsys.readouterr().err


# ingest


def test_ingest_gnt(tmp_path, capsys):
    raw = tmp_path / "raw"
    raw.mkdir()
    xs, _ = make_toy_fonts(3, 40, seed=0)
    (raw / "three.gnt").write_bytes(write_gnt(xs))
    assert main(["ingest", "--input", str(raw), "--output", str(tmp_path / "out"), "--image-size", "32"]) == 0
    pgms = sorted(p.name for p in (tmp_path / "out").glob("*.pgm"))
    assert len(pgms) == 3
    assert "samples 3" in (tmp_path / "out" / "summary.txt").read_text().splitlines()
    assert "size 40x40 3" in (tmp_path / "out" / "summary.txt").read_text()
    assert read_pgm(tmp_path / "out" / pgms[0]).shape == (32, 32)
    assert set(read_manifest(tmp_path / "out").values()) == {s.codepoint for s in xs}
    assert (tmp_path / "out" / "ingest_config.txt").exists()


def test_ingest_empty_dir(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["ingest", "--input", str(tmp_path / "empty"), "--output", str(tmp_path / "o")]) == 2
    assert "no samples" in capsys.readouterr().err


def test_ingest_partial_failure(tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    xs, _ = make_toy_fonts(2, 32, seed=0)
    (raw / "good.gnt").write_bytes(write_gnt(xs))
    (raw / "broken.gnt").write_bytes(write_gnt(xs)[:-5])
    assert main(["ingest", "--input", str(raw), "--output", str(tmp_path / "o"), "--image-size", "32"]) == 0
    summary = (tmp_path / "o" / "summary.txt").read_text()
    assert "samples 2" in summary and "error_file broken.gnt" in summary


def test_ingest_all_fail(tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    (raw / "a.gnt").write_bytes(b"\x01\x02")
    assert main(["ingest", "--input", str(raw), "--output", str(tmp_path / "o")]) == 1


def test_ingest_missing_dir(tmp_path):
    assert main(["ingest", "--input", str(tmp_path / "nope"), "--output", str(tmp_path / "o")]) == 2


def test_ingest_calligraphy_excludes_blanks(tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    ink = np.full((30, 20), 240, np.uint8)
    ink[5:25, 5:15] = 10
    blank = np.full((30, 20), 240, np.uint8)
    write_style_dir(raw, [Item("ink.pgm", ink, 0x554A), Item("blank.pgm", blank, 0x554B)])
    assert main(["ingest", "--input", str(raw), "--output", str(tmp_path / "o"), "--image-size", "32",
                 "--preprocess", "calligraphy"]) == 0
    summary = (tmp_path / "o" / "summary.txt").read_text()
    assert "samples 1" in summary and "excluded_file blank.pgm" in summary


# train / generate


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    x, y = write_toy_styles(root)
    args = ["train", "--style-a", str(x), "--style-b", str(y), *TINY, "--total-epochs", "5", "--checkpoint-every", "2"]
    assert main(args + ["--output", str(root / "run"), "--r-a", "0.5", "--r-b", "0.5"]) == 0
    assert main(args + ["--output", str(root / "full")]) == 0
    return root


def test_train_outputs(trained):
    run = trained / "run"
    lines = (run / "losses.tsv").read_text().splitlines()
    assert lines[0].split("\t") == ["epoch", "iter", "gan_g", "gan_f", "cycle", "disc_g", "disc_f", "lr"]
    assert len(lines) - 1 == 5 * 4  # r=0.5 of 8 glyphs
    assert len((trained / "full" / "losses.tsv").read_text().splitlines()) - 1 == 5 * 8
    assert all(np.isfinite([float(v) for v in line.split("\t")[2:]]).all() for line in lines[1:])
    assert {p.name for p in run.glob("*.gcyc")} == {"epoch0002.gcyc", "epoch0004.gcyc", "epoch0005.gcyc", "latest.gcyc"}
    assert (run / "losses.png").stat().st_size > 0
    cfg = config_mod.load_config_file(run / "config.txt")
    assert cfg["r_a"] == 0.5 and cfg["r_b"] == 0.5
    split = (run / "split_a.tsv").read_text().splitlines()
    assert sum(line.endswith("\ttrain") for line in split) == 4 and len(split) == 8


def test_train_is_reproducible_and_resumes(trained, tmp_path):
    x, y = trained / "X", trained / "Y"
    args = ["train", "--style-a", str(x), "--style-b", str(y), *TINY, "--checkpoint-every", "1"]
    assert main(args + ["--output", str(tmp_path / "a"), "--total-epochs", "3"]) == 0
    assert main(args + ["--output", str(tmp_path / "b"), "--total-epochs", "1"]) == 0
    assert main(args + ["--output", str(tmp_path / "b"), "--total-epochs", "3",
                        "--resume", str(tmp_path / "b" / "epoch0001.gcyc")]) == 0
    assert (tmp_path / "a" / "losses.tsv").read_bytes() == (tmp_path / "b" / "losses.tsv").read_bytes()
    assert (tmp_path / "a" / "latest.gcyc").read_bytes() == (tmp_path / "b" / "latest.gcyc").read_bytes()
    assert main(args + ["--output", str(tmp_path / "c"), "--total-epochs", "3"]) == 0
    assert (tmp_path / "a" / "losses.tsv").read_bytes() == (tmp_path / "c" / "losses.tsv").read_bytes()


def test_train_rejects_wrong_image_size(trained, tmp_path):
    args = ["train", "--style-a", str(trained / "X"), "--style-b", str(trained / "Y"), "--image-size", "64",
            "--output", str(tmp_path / "o")]
    assert main(args) == 2


def test_generate_forward_and_reverse(trained, tmp_path):
    ckpt = str(trained / "run" / "latest.gcyc")
    assert main(["generate", "--checkpoint", ckpt, "--input", str(trained / "X"), "--output", str(tmp_path / "g"), *TINY]) == 0
    src = {it.name: it for it in scan_style_dir(trained / "X")[0]}
    out, _ = scan_style_dir(tmp_path / "g")
    assert len(out) == len(src)
    for it in out:
        assert it.name.startswith("toY_")
        orig = src[it.name[4:]]
        assert it.pixels.shape == orig.pixels.shape and it.codepoint == orig.codepoint
    assert main(["generate", "--checkpoint", ckpt, "--input", str(trained / "Y"), "--output", str(tmp_path / "r"), *TINY,
                 "--reverse"]) == 0
    assert all(it.name.startswith("toX_") for it in scan_style_dir(tmp_path / "r")[0])


def test_generate_from_fresh_checkpoint(trained, tmp_path):
    args = ["train", "--style-a", str(trained / "X"), "--style-b", str(trained / "Y"), *TINY, "--total-epochs", "0"]
    assert main(args + ["--output", str(tmp_path / "fresh")]) == 0
    assert main(["generate", "--checkpoint", str(tmp_path / "fresh" / "latest.gcyc"), "--input", str(trained / "X"),
                 "--output", str(tmp_path / "g"), *TINY]) == 0
    out, _ = scan_style_dir(tmp_path / "g")
    assert len(out) == 8 and all(0 < it.pixels.mean() < 255 for it in out)


def test_generate_mismatch_names_both(trained, tmp_path, capsys):
    ckpt = str(trained / "run" / "latest.gcyc")
    bad = ["--image-size", "64", "--base-filters", "4", "--transfer-blocks", "1", "--disc-base-filters", "4"]
    assert main(["generate", "--checkpoint", ckpt, "--input", str(trained / "X"), "--output", str(tmp_path / "g"), *bad]) == 2
    err = capsys.readouterr().err
    assert "image_size=32" in err and "image_size=64" in err


# evaluate


@pytest.fixture(scope="module")
def styles(tmp_path_factory):
    root = tmp_path_factory.mktemp("styles")
    x, y = write_toy_styles(root, n_glyphs=8, variants=6, seed=1)
    return root, x, y


def _evaluate(gen, target, out, *extra):
    return main(["evaluate", "--generated", str(gen), "--target", str(target), "--output", str(out),
                 "--classifier-epochs", "10", *extra])


def test_evaluate_copies_match_self_split(styles, tmp_path):
    root, x, y = styles
    assert _evaluate(y, y, tmp_path / "m", "--source", str(x)) == 0
    m = {k: float(v) for k, v in read_metrics(tmp_path / "m" / "metrics.txt").items()}
    assert m["style_discrepancy"] / m["self_split_discrepancy"] < 1.5
    assert 0 < m["content_top1"] <= m["content_top5"] <= 1
    assert m["n_evaluated"] == 48
    assert (tmp_path / "m" / "metrics.png").exists() and (tmp_path / "m" / "classifier.gcyc").exists()


def test_evaluate_source_as_generated_exceeds_baseline(styles, tmp_path):
    root, x, y = styles
    assert _evaluate(x, y, tmp_path / "m") == 0
    m = {k: float(v) for k, v in read_metrics(tmp_path / "m" / "metrics.txt").items()}
    assert m["style_discrepancy"] > m["self_split_discrepancy"]
    # reuse the saved classifier
    assert _evaluate(x, y, tmp_path / "m2", "--classifier", str(tmp_path / "m" / "classifier.gcyc")) == 0
    m2 = read_metrics(tmp_path / "m2" / "metrics.txt")
    assert m2["style_discrepancy"] == read_metrics(tmp_path / "m" / "metrics.txt")["style_discrepancy"]


def test_evaluate_empty_generated(styles, tmp_path):
    (tmp_path / "empty").mkdir()
    assert _evaluate(tmp_path / "empty", styles[2], tmp_path / "m") == 2


def test_evaluate_label_offenders(styles, tmp_path, capsys):
    gen = tmp_path / "gen"
    items, _ = scan_style_dir(styles[2])
    bad = Item(items[0].name, items[0].pixels, items[1].codepoint if items[1].codepoint != items[0].codepoint else 1)
    write_style_dir(gen, [bad] + items[1:4])
    assert _evaluate(gen, styles[2], tmp_path / "m") == 2
    assert items[0].name in capsys.readouterr().err


# grid


def test_montage_geometry():
    cols = [(f"c{i}", [np.full((64, 64), i * 50, np.uint8) for _ in range(4)]) for i in range(4)]
    m = montage(cols)
    assert m.shape == (4 * 64 + 3 * 2, 4 * 64 + 3 * 2)
    assert (m[:, 64:66] == 128).all() and (m[64:66, :] == 128).all()
    assert (m[:64, 66:130] == 50).all()
    strip = montage(cols[:1])
    assert strip.shape == (4 * 64 + 3 * 2, 64)


def test_grid_command(trained, tmp_path, capsys):
    out = tmp_path / "grid" / "m.pgm"
    assert main(["grid", "--output", str(out), str(trained / "X"), str(trained / "Y")]) == 0
    plane = read_pgm(out)
    assert plane.shape == (8 * 32 + 7 * 2, 2 * 32 + 2)
    assert out.with_suffix(".png").exists()
    few = tmp_path / "few"
    write_style_dir(few, [Item("a.pgm", np.zeros((32, 32), np.uint8), None)])
    assert main(["grid", "--output", str(out), str(trained / "X"), str(few)]) == 2
    err = capsys.readouterr().err
    assert str(few) in err and str(trained / "X") in err
