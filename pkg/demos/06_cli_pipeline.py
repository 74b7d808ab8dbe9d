"""The command-line pipeline: simulate, fit, evaluate.

Run with ``python3 demos/06_cli_pipeline.py``.  Each call below is the same
as the shell command printed before it.
"""
# %% simulate, fit and evaluate inside a scratch directory
import json
import tempfile
from pathlib import Path

from grade.cli import main


def grade(*args):
    print("$ grade", " ".join(map(str, args)))
    code = main([str(a) for a in args])
    print("  exit code", code)
    return code


work = Path(tempfile.mkdtemp(prefix="grade-demo-"))
grade("simulate", "--out", work / "sim", "--seed", 7)
grade("fit", "--data", work / "sim" / "dataset.csv", "--truth", work / "sim" / "truth.csv",
      "--out", work / "fit", "--select", "edges=10")
grade("eval", "--estimate", work / "fit" / "network.json", "--truth", work / "sim" / "truth.csv",
      "--out", work / "eval")

# %% what was written
for sub in ("sim", "fit", "eval"):
    print(sub, sorted(p.name for p in (work / sub).iterdir()))
report = json.loads((work / "eval" / "report.json").read_text())
print("AUC", round(report["auc"], 3), "confusion", report["confusion"])
print("edge list:\n" + (work / "fit" / "edges.csv").read_text())

# %% a configuration error exits with code 2 and writes nothing
(work / "bad.json").write_text(json.dumps({"sigma": 1.0, "noise": 2}))
grade("simulate", "--config", work / "bad.json", "--out", work / "never")
print("output written:", (work / "never").exists())
