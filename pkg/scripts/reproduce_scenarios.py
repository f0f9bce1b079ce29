import json
import os
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from rejectgate.cli import main  # noqa: E402

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "rejectgate" / "scenarios"
TARGET_SEASON = {"clean_noisy": "K19", "u_shape": "S20", "drift": "K20", "heavy_tail": "K20"}
ORACLE_THRESHOLD = {"heavy_tail": "0.5"}


def run(*argv):
    code = main([str(arg) for arg in argv])
    if code != 0:
        raise SystemExit(f"rejectgate {argv[0]} exited with {code}")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def reproduce(name, workdir):
    data_dir = workdir / name
    run("generate", "--config", SCENARIO_DIR / f"{name}.json", "--out", data_dir)
    data = data_dir / "dataset.jsonl"
    print(f"\n== {name} ==")

    for kind in ("historic", "present"):
        split_dir = data_dir / f"split-{kind}"
        # Single-season scenarios only support present-aware splits
        if main(["split", "--data", str(data), "--target-season", TARGET_SEASON[name],
                 "--kind", kind, "--out", str(split_dir)]) != 0:
            print(f"  {kind}: no split")
            continue
        manifest = split_dir / "split.csv"
        cal_dir, eval_dir = data_dir / f"calibrate-{kind}", data_dir / f"evaluate-{kind}"
        run("calibrate", "--data", data, "--manifest", manifest, "--out", cal_dir)
        run("evaluate", "--data", data, "--manifest", manifest,
            "--calibration", cal_dir / "calibration.json", "--out", eval_dir)
        for level in read_json(eval_dir / "evaluation.json")["levels"]:
            print(
                f"  {kind:8s} {level['notation']:18s} MAE {level['mae']['point']:.3f} "
                f"[{level['mae']['lo']:.3f}, {level['mae']['hi']:.3f}] "
                f"ungated {level['ungated_mae']:.3f} rejected {level['rejected_fraction']:.1%}"
            )

    oracle_dir = data_dir / "oracle"
    threshold = ORACLE_THRESHOLD.get(name)
    if threshold is None:
        run("sweep", "--data", data, "--out", data_dir / "sweep")
        threshold = str(read_json(data_dir / "sweep" / "manifest.json")["results"]["optimal_threshold"])
    run("oracle", "--data", data, "--mode", "aware", "--threshold", threshold, "--out", oracle_dir)
    with (oracle_dir / "oracle_aware_all.csv").open(encoding="utf-8") as handle:
        rows = [line.strip().split(",") for line in handle][1:]
    print("  oracle (t=" + threshold + "): " + " ".join(f"{float(f):.1f}:{float(m):.3f}" for f, m, _ in rows))


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="rejectgate-"))
    for scenario in sorted(TARGET_SEASON):
        reproduce(scenario, out)
    print(f"\nArtifacts written to {out}")
