"""Command-line front end.

Each command reads the artifacts of the previous stage from the run
directory (``paths.out``) and writes its own, so stages can be rerun
individually::

    keystress synth --out run
    keystress extract --out run
    keystress preprocess --out run
    keystress train --out run
    keystress eval --out run
    keystress score run/sessions/stress/stress_000.jsonl --out run

``keystress run`` chains synth through eval. Every JSON artifact carries the
config hash; ``eval`` and ``score`` refuse artifacts produced under another
config or pipeline.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import anomaly, supervised
from .config import RunConfig, default_config_text
from .errors import ConfigInvalid, HashMismatch, KeystressError, MissingInput
from .events import load_session, load_session_dir
from .experiment import prepare
from .features import FeatureMatrix, FeatureSchema, default_schema, extract_features, extract_matrix
from .metrics import EvalReport, render_csv, render_markdown
from .preprocess import PipelineParams, apply_pipeline, fit_report
from .synthgen import generate_dataset, write_dataset

log = logging.getLogger("keystress")

COMMANDS = ("synth", "extract", "preprocess", "train", "eval", "score", "report", "run")


def _dump(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=1) + "\n"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_json(path: Path, what: str) -> dict:
    if not path.is_file():
        raise MissingInput(f"{what} not found at {path}; run the earlier stage first")
    return json.loads(path.read_text(encoding="utf-8"))


def _check_config(artifact: dict, cfg: RunConfig, path: Path) -> None:
    if artifact.get("config_hash") != cfg.hash():
        raise HashMismatch(f"{path} was produced under config {artifact.get('config_hash')}, "
                           f"current config is {cfg.hash()}")


def _out(cfg: RunConfig) -> Path:
    return Path(cfg.paths.out)


# synth

def cmd_synth(cfg: RunConfig) -> Path:
    g = cfg.generator
    sessions = generate_dataset(
        g.n_normal, g.n_stress, g.separation, g.base_profile(), cfg.seed, g.participants,
        g.target_keys, g.participant_jitter, g.session_jitter,
    )
    root = cfg.paths.data_root()
    if (root / "manifest.json").is_file():
        # drop stale sessions left by an earlier, larger synth run
        keep = {(s.label, s.id) for s in sessions}
        for label in ("normal", "stress"):
            for old in (root / label).glob("*.jsonl"):
                if (label, old.stem) not in keep:
                    old.unlink()
    manifest = {
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "generator": {k: v for k, v in cfg.to_dict()["generator"].items() if k != "profile"},
        "profile": g.base_profile().to_dict(),
        "sessions": [{"id": s.id, "label": s.label, "events": len(s.events)} for s in sessions],
    }
    write_dataset(sessions, root, manifest)
    return root


# extract

def _schema_path(cfg):
    return _out(cfg) / "schema.json"


def cmd_extract(cfg: RunConfig) -> Path:
    root = cfg.paths.data_root()
    if not root.is_dir():
        raise MissingInput(f"session directory {root} does not exist")
    sessions = load_session_dir(root)
    if not sessions:
        raise MissingInput(f"no sessions under {root}/normal or {root}/stress")
    schema = default_schema()
    matrix = extract_matrix(sessions, schema)
    out = _out(cfg)
    out.mkdir(parents=True, exist_ok=True)
    matrix.to_csv(out / "features.csv")
    _write(_schema_path(cfg), _dump({
        "config_hash": cfg.hash(),
        "features": json.loads(schema.to_json()),
        "artifacts": {"features.csv": _sha256(out / "features.csv")},
    }))
    return out / "features.csv"


def _load_features(cfg: RunConfig) -> tuple[FeatureMatrix, FeatureSchema]:
    meta = _read_json(_schema_path(cfg), "feature schema")
    path = _out(cfg) / "features.csv"
    if not path.is_file():
        raise MissingInput(f"feature CSV not found at {path}")
    if meta["artifacts"]["features.csv"] != _sha256(path):
        raise HashMismatch(f"{path} does not match the checksum recorded in schema.json")
    schema = FeatureSchema.from_json(json.dumps(meta["features"]))
    return FeatureMatrix.from_csv(path, dict(schema.kinds)), schema


# preprocess

def _ids(matrix: FeatureMatrix, idx) -> list[str]:
    return [matrix.ids[i] for i in idx]


def cmd_preprocess(cfg: RunConfig) -> Path:
    matrix, schema = _load_features(cfg)
    prep = prepare(matrix, cfg.seed, cfg.pipeline, cfg.split.spec(cfg.seed))
    anomaly_split = anomaly.split_anomaly(matrix.labels, cfg.anomaly.frac_normal_train, cfg.seed,
                                          cfg.anomaly.of_normals)
    out = _out(cfg)
    prep.fit_view.to_csv(out / "reduced.csv")
    prep.inference_view.to_csv(out / "reduced_inference.csv")
    _write(out / "splits.json", _dump({
        "config_hash": cfg.hash(),
        "supervised": {k: _ids(matrix, v) for k, v in prep.splits.items()},
        "anomaly": {k: _ids(matrix, v) for k, v in anomaly_split.items()},
    }))
    _write(out / "pipeline.json", _dump({
        "config_hash": cfg.hash(),
        "pipeline_hash": prep.params.hash(),
        "params": json.loads(prep.params.to_json()),
        "artifacts": {name: _sha256(out / name) for name in ("reduced.csv", "reduced_inference.csv", "splits.json")},
    }))
    print(fit_report(prep.params, len(schema)), file=sys.stderr)
    return out / "pipeline.json"


def _load_pipeline(cfg: RunConfig) -> tuple[PipelineParams, dict]:
    path = _out(cfg) / "pipeline.json"
    meta = _read_json(path, "pipeline")
    _check_config(meta, cfg, path)
    params = PipelineParams.from_json(json.dumps(meta["params"]))
    if params.hash() != meta["pipeline_hash"]:
        raise HashMismatch(f"{path}: stored pipeline hash does not match its parameters")
    for name, digest in meta["artifacts"].items():
        p = _out(cfg) / name
        if not p.is_file():
            raise MissingInput(f"{p} not found; rerun preprocess")
        if _sha256(p) != digest:
            raise HashMismatch(f"{p} changed since preprocess")
    return params, meta


def _load_reduced(cfg: RunConfig):
    out = _out(cfg)
    fit_view = FeatureMatrix.from_csv(out / "reduced.csv")
    inference_view = FeatureMatrix.from_csv(out / "reduced_inference.csv")
    splits = json.loads((out / "splits.json").read_text(encoding="utf-8"))
    pos = {sid: i for i, sid in enumerate(fit_view.ids)}

    def idx(ids):
        return np.array([pos[s] for s in ids], dtype=int)

    sup = {k: idx(v) for k, v in splits["supervised"].items()}
    anom = {k: idx(v) for k, v in splits["anomaly"].items()}
    return fit_view, inference_view, sup, anom


# train

def _model_path(cfg: RunConfig, kind: str) -> Path:
    return _out(cfg) / "models" / f"{kind}.json"


def cmd_train(cfg: RunConfig) -> list[Path]:
    params, _ = _load_pipeline(cfg)
    fit_view, inference_view, sup, anom = _load_reduced(cfg)
    phash = params.hash()
    written = []
    data = {s: (fit_view.X[i], fit_view.y[i]) for s, i in sup.items()}
    for kind in cfg.supervised.models:
        hp = dict(cfg.supervised.hyperparams.get(kind, {}))
        if "seed" in supervised.DEFAULTS[kind]:
            hp.setdefault("seed", cfg.seed)
        model = supervised.select_and_train(
            kind, data["train"], data["val"] if cfg.supervised.grid_search else None,
            params.selected_features, phash, **hp,
        )
        written.append(_write(_model_path(cfg, kind), _dump(
            {"config_hash": cfg.hash(), "family": "supervised", "model": json.loads(model.to_json())})))
    X_train = inference_view.X[anom["train"]]
    for kind in cfg.anomaly.models:
        hp = dict(cfg.anomaly.hyperparams.get(kind, {}))
        if "seed" in anomaly.DEFAULTS[kind]:
            hp.setdefault("seed", cfg.seed)
        model = anomaly.fit_detector(kind, X_train, cfg.anomaly.contamination,
                                     features=params.selected_features, pipeline_hash=phash, **hp)
        written.append(_write(_model_path(cfg, kind), _dump(
            {"config_hash": cfg.hash(), "family": "anomaly", "model": json.loads(model.to_json())})))
    return written


def _load_models(cfg: RunConfig, params: PipelineParams):
    sup, anom = {}, {}
    for kind in (*cfg.supervised.models, *cfg.anomaly.models):
        path = _model_path(cfg, kind)
        meta = _read_json(path, f"{kind} model")
        _check_config(meta, cfg, path)
        text = json.dumps(meta["model"])
        if meta["family"] == "supervised":
            model = supervised.TrainedModel.from_json(text)
            sup[kind] = model
        else:
            model = anomaly.AnomalyModel.from_json(text)
            anom[kind] = model
        if model.pipeline_hash != params.hash() or list(model.features) != list(params.selected_features):
            raise HashMismatch(f"{path} was trained on a different pipeline ({model.pipeline_hash})")
    return sup, anom


# eval

def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _split_names(n: int, splits: dict[str, np.ndarray]) -> list[str]:
    names = [""] * n
    for s, idx in splits.items():
        for i in idx:
            names[i] = s
    return names


def cmd_eval(cfg: RunConfig) -> list[Path]:
    params, _ = _load_pipeline(cfg)
    fit_view, inference_view, sup_split, anom_split = _load_reduced(cfg)
    sup_models, anom_models = _load_models(cfg, params)
    out = _out(cfg) / "reports"

    sup_reports: list[EvalReport] = []
    data = {s: (fit_view.X[i], fit_view.y[i]) for s, i in sup_split.items()}
    for kind, model in sup_models.items():
        sup_reports.append(supervised.evaluate(model, data, cfg.supervised.undefined_as_zero))
    anom_reports: list[EvalReport] = []
    X_tr = inference_view.X[anom_split["train"]]
    X_te, y_te = inference_view.X[anom_split["test"]], inference_view.y[anom_split["test"]]
    for kind, model in anom_models.items():
        anom_reports.append(anomaly.evaluate_anomaly(model, X_tr, X_te, y_te))

    written = [
        _write(out / "table4.md", render_markdown(sup_reports)),
        _write(out / "table4.csv", render_csv(sup_reports)),
        _write(out / "table5.md", render_markdown(anom_reports)),
        _write(out / "table5.csv", render_csv(anom_reports)),
    ]
    feats = list(params.selected_features)
    written.append(_write(out / "scatter.csv", _csv_text(
        ["session_id", "label", *feats],
        ([sid, lab, *(repr(float(v)) for v in row)]
         for sid, lab, row in zip(fit_view.ids, fit_view.labels, fit_view.X)),
    )))
    # classifier predictions on the supervised view, detector scores on the inference view
    sup_names = _split_names(len(fit_view), sup_split)
    anom_names = _split_names(len(fit_view), anom_split)
    preds = {k: m.predict(fit_view.X) for k, m in sup_models.items()}
    scores = {k: m.score(inference_view.X) for k, m in anom_models.items()}
    flags = {k: m.predict(inference_view.X) for k, m in anom_models.items()}
    header = ["session_id", "label", "split", "anomaly_split", *feats,
              *(f"pred_{k}" for k in preds), *(c for k in scores for c in (f"score_{k}", f"flag_{k}"))]
    rows = []
    for i, (sid, lab) in enumerate(zip(fit_view.ids, fit_view.labels)):
        row = [sid, lab, sup_names[i], anom_names[i], *(repr(float(v)) for v in fit_view.X[i])]
        row += [int(preds[k][i]) for k in preds]
        for k in scores:
            row += [repr(float(scores[k][i])), int(flags[k][i])]
        rows.append(row)
    written.append(_write(out / "predictions.csv", _csv_text(header, rows)))
    _write(out / "eval.json", _dump({
        "config_hash": cfg.hash(),
        "pipeline_hash": params.hash(),
        "selected_features": feats,
        "undefined": {r.model: {s: sorted(v) for s, v in r.flags.items()} for r in sup_reports + anom_reports},
        "artifacts": {p.name: _sha256(p) for p in written},
    }))
    return written + [out / "eval.json"]


# score

def cmd_score(cfg: RunConfig, session_path: str | Path) -> dict:
    params, _ = _load_pipeline(cfg)
    sup_models, anom_models = _load_models(cfg, params)
    path = Path(session_path)
    if not path.is_file():
        raise MissingInput(f"session file {path} not found")
    session = load_session(path, diagnostics=sys.stderr)
    x = apply_pipeline(extract_features(session), params)
    result: dict[str, Any] = {
        "session": session.id,
        "config_hash": cfg.hash(),
        "pipeline_hash": params.hash(),
        "features": {n: float(v) for n, v in zip(params.selected_features, x)},
        "scores": {},
        "decisions": {},
    }
    for kind, model in anom_models.items():
        result["scores"][kind] = {"score": float(model.score(x)[0]), "threshold": float(model.threshold)}
        result["decisions"][kind] = "stress" if model.predict(x)[0] else "normal"
    for kind, model in sup_models.items():
        result["decisions"][kind] = "stress" if model.predict(x)[0] else "normal"
    votes = list(result["decisions"].values())
    n_stress = votes.count("stress")
    result["votes"] = {"stress": n_stress, "normal": len(votes) - n_stress}
    # ties go to normal, matching the classifiers' vote-tie rule
    result["decision"] = "stress" if 2 * n_stress > len(votes) else "normal"
    return result


# report

def cmd_report(cfg: RunConfig, style: str = "markdown") -> str:
    out = _out(cfg) / "reports"
    ext = "md" if style == "markdown" else "csv"
    parts = []
    for table, title in (("table4", "Supervised classifiers"), ("table5", "Anomaly detectors")):
        path = out / f"{table}.{ext}"
        if not path.is_file():
            raise MissingInput(f"{path} not found; run eval first")
        text = path.read_text(encoding="utf-8")
        parts.append(f"## {title}\n\n{text}" if style == "markdown" else text)
    return "\n".join(parts)


def cmd_run(cfg: RunConfig) -> list[Path]:
    cmd_synth(cfg)
    cmd_extract(cfg)
    cmd_preprocess(cfg)
    cmd_train(cfg)
    return cmd_eval(cfg)


# argument handling

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (defaults built in)")
    common.add_argument("--seed", type=int, help="global seed")
    common.add_argument("--out", help="run directory")
    common.add_argument("--data", help="session directory (default <out>/sessions)")
    common.add_argument("--models", help="comma-separated model kinds, or 'supervised' / 'anomaly' / 'all'")
    common.add_argument("--k", type=int, help="number of selected features")
    common.add_argument("--contamination", type=float, help="anomaly threshold contamination")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="keystress", description="Keystroke-dynamics stress detection experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("synth", parents=[common], help="generate a synthetic labeled session directory")
    sub.add_parser("extract", parents=[common], help="session directory -> features.csv")
    sub.add_parser("preprocess", parents=[common], help="fit the reduction pipeline on the training split")
    sub.add_parser("train", parents=[common], help="train classifiers and anomaly detectors")
    sub.add_parser("eval", parents=[common], help="write report tables and plot-ready CSVs")
    sc = sub.add_parser("score", parents=[common], help="score one session file")
    sc.add_argument("session", help="JSONL session log")
    rp = sub.add_parser("report", parents=[common], help="print the report tables")
    rp.add_argument("--style", choices=("markdown", "csv"), default="markdown")
    sub.add_parser("run", parents=[common], help="synth, extract, preprocess, train and eval in one go")
    dc = sub.add_parser("default-config", help="print the bundled default config")
    dc.set_defaults(config=None)
    return p


def _select_models(cfg: RunConfig, spec: str) -> None:
    wanted = [m.strip() for m in spec.split(",") if m.strip()]
    sup, anom = [], []
    for m in wanted:
        if m in ("all", "supervised"):
            sup += list(supervised.KINDS)
        if m in ("all", "anomaly"):
            anom += list(anomaly.KINDS)
        if m in supervised.KINDS:
            sup.append(m)
        elif m in anomaly.KINDS:
            anom.append(m)
        elif m not in ("all", "supervised", "anomaly"):
            raise ConfigInvalid(f"unknown model {m!r}")
    cfg.supervised.models = list(dict.fromkeys(sup))
    cfg.anomaly.models = list(dict.fromkeys(anom))


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigInvalid("seed must be non-negative")
        cfg.seed = args.seed
    if args.out is not None:
        cfg.paths.out = args.out
    if args.data is not None:
        cfg.paths.data = args.data
    if args.models is not None:
        _select_models(cfg, args.models)
    if args.k is not None:
        cfg.pipeline = replace(cfg.pipeline, k=args.k)
    if args.contamination is not None:
        cfg.anomaly.contamination = args.contamination
    cfg.validate()
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "default-config":
        sys.stdout.write(default_config_text())
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        if args.command == "score":
            sys.stdout.write(_dump(cmd_score(cfg, args.session)))
        elif args.command == "report":
            sys.stdout.write(cmd_report(cfg, args.style))
        else:
            result = {"synth": cmd_synth, "extract": cmd_extract, "preprocess": cmd_preprocess,
                      "train": cmd_train, "eval": cmd_eval, "run": cmd_run}[args.command](cfg)
            for p in result if isinstance(result, list) else [result]:
                print(p)
    except KeystressError as exc:
        print(f"{exc.name}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
