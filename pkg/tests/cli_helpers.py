from pathlib import Path

from dream.cli import main

PIPELINE = [
    ["synth", "--n", "90", "--seed", "2", "--train-frac", "0.3", "-o", "g.json"],
    ["corrupt", "-i", "g.json", "--rate", "0.3", "--seed", "1", "-o", "n.json"],
    ["train", "-i", "n.json", "-o", "run", "--epochs", "8", "--hidden", "8", "--dump-anchors", "anchors.jsonl"],
    ["eval", "-i", "n.json", "--checkpoint", "run/checkpoint.json", "-o", "eval.json"],
    ["sweep", "-i", "g.json", "-o", "sweep.csv", "--epochs", "3", "--hidden", "4", "--rates", "0,0.3", "--seeds", "0,1"],
    ["ablate", "-i", "g.json", "-o", "ablate.csv", "--epochs", "3", "--hidden", "4", "--seeds", "0"],
]


def run_pipeline(workdir: Path, monkeypatch) -> dict[str, bytes]:
    """Run every subcommand once inside ``workdir``; return every output file's bytes."""
    monkeypatch.chdir(workdir)
    for argv in PIPELINE:
        code = main(argv)
        assert code == 0, argv
    return {str(p.relative_to(workdir)): p.read_bytes() for p in sorted(workdir.rglob("*")) if p.is_file()}
