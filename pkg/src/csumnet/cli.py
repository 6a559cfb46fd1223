"""Scriptable front end: batch experiments, golden regression, benchmarks.

Machine-readable output goes to stdout, logs to stderr; identical seeds give
byte-identical output files.  Exit code 2 signals a contract violation.
"""

from __future__ import annotations

import json
import statistics
import sys
import time

import click

from . import backdoor, datagen, defense, nn
from .checksum import ChecksumConfig
from .errors import CsumnetError


def _fail(exc: Exception) -> None:
    click.echo(json.dumps({"code": getattr(exc, "code", "error"),
                           "message": str(exc)}), err=True)
    sys.exit(2)


def _cfg(m, sk, precision, th) -> ChecksumConfig:
    return ChecksumConfig(m=m, sk=sk, precision=precision, th=th)


def _emit(data, out) -> None:
    text = data if isinstance(data, str) else json.dumps(data, indent=1) + "\n"
    if out and out != "-":
        with open(out, "w") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)


@click.group()
def main():
    """Checksum-backdoor simulator command line."""


@main.group()
def dataset():
    """Generate or poison 2D dot-pattern datasets."""


@dataset.command("gen")
@click.option("--pattern", type=click.Choice(datagen.PATTERNS), required=True)
@click.option("--n", type=int, required=True)
@click.option("--noise", type=float, default=0.0)
@click.option("--seed", type=int, default=0)
@click.option("--split", type=float, default=0.5)
@click.option("--out", default="-")
def dataset_gen(pattern, n, noise, seed, split, out):
    try:
        d = datagen.generate(pattern, n, noise=noise, seed=seed, split=split)
    except (CsumnetError, ValueError) as e:
        _fail(e)
    _emit(datagen.to_csv(d), out)


@dataset.command("poison")
@click.option("--data", "path", required=True, type=click.Path(exists=True))
@click.option("--trojan", type=float, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", default="-")
def dataset_poison(path, trojan, seed, out):
    try:
        d = datagen.from_csv(open(path).read())
        d = datagen.poison(d, trojan, seed=seed)
    except (CsumnetError, ValueError) as e:
        _fail(e)
    _emit(datagen.to_csv(d), out)


@main.command()
@click.option("--data", "path", required=True, type=click.Path(exists=True))
@click.option("--hidden", default="4", help="comma-separated hidden layer sizes")
@click.option("--features", default="x,y", help="comma-separated feature names")
@click.option("--activation", type=click.Choice([nn.RELU, nn.TANH, nn.RELU_CSUM]),
              default=nn.RELU)
@click.option("--m", type=int, default=256)
@click.option("--sk", type=int, default=0)
@click.option("--precision", type=int, default=15)
@click.option("--th", type=int, default=None)
@click.option("--lr", type=float, default=0.03)
@click.option("--batch", type=int, default=10)
@click.option("--epochs", type=int, default=100)
@click.option("--seed", type=int, default=0)
@click.option("--model-out", default="-")
@click.option("--loss-out", default=None)
def train(path, hidden, features, activation, m, sk, precision, th,
          lr, batch, epochs, seed, model_out, loss_out):
    """Train a network on a dataset CSV; write model JSON and loss CSV."""
    try:
        d = datagen.from_csv(open(path).read())
        mask = datagen.normalize_mask(tuple(features.split(",")))
        cfg = _cfg(m, sk, precision, th)
        spec = nn.make_spec(len(mask), [int(h) for h in hidden.split(",")],
                            activation, cfg)
        model, history = nn.train(nn.init(spec, seed=seed), d,
                                  nn.Hyper(lr, batch, epochs, seed), mask)
    except (CsumnetError, ValueError) as e:
        _fail(e)
    _emit(json.dumps(nn.model_to_json(model), indent=1) + "\n", model_out)
    if loss_out:
        with open(loss_out, "w") as f:
            f.write("epoch,loss\n")
            for i, loss in enumerate(history):
                f.write(f"{i},{loss!r}\n")
    click.echo(f"train accuracy: {nn.accuracy(model, d.train, mask):.3f}", err=True)


@main.command()
@click.option("--model", "path", required=True, type=click.Path(exists=True))
@click.option("--m", type=int, default=256)
@click.option("--sk", type=int, required=True)
@click.option("--precision", type=int, default=15)
@click.option("--th", type=int, default=None)
@click.option("--out", default="-")
def plant(path, m, sk, precision, th, out):
    """Swap every hidden ReLU for the backdoored variant, weights unchanged."""
    try:
        model = nn.load_model(path)
        planted = backdoor.plant(model, _cfg(m, sk, precision, th))
    except (CsumnetError, ValueError) as e:
        _fail(e)
    _emit(json.dumps(nn.model_to_json(planted), indent=1) + "\n", out)


@main.group()
def attack():
    """Run one of the attack protocols."""


@attack.command("signature")
@click.option("--data", "path", required=True, type=click.Path(exists=True))
@click.option("--m", type=int, default=256)
@click.option("--sk", type=int, required=True)
@click.option("--precision", type=int, default=15)
@click.option("--out", default="-")
@click.option("--data-out", default=None, help="write the attacked dataset CSV")
def attack_signature(path, m, sk, precision, out, data_out):
    try:
        d = datagen.from_csv(open(path).read())
        attacked, hist = backdoor.signature_attack(d, _cfg(m, sk, precision, None))
    except (CsumnetError, ValueError) as e:
        _fail(e)
    flipped = [i for i, (a, b) in enumerate(zip(d.test, attacked.test))
               if a.label != b.label]
    _emit({"flipped": flipped, "histogram": hist.to_json()}, out)
    if data_out:
        with open(data_out, "w") as f:
            f.write(datagen.to_csv(attacked))


@attack.command("backtrack")
@click.option("--model", "path", required=True, type=click.Path(exists=True))
@click.option("--x", type=float, required=True)
@click.option("--y", type=float, required=True)
@click.option("--features", default="x,y")
@click.option("--out", default="-")
def attack_backtrack(path, x, y, features, out):
    try:
        model = nn.load_model(path)
        p = datagen.LabeledPoint(x, y, 1)
        trace = backdoor.backtrack_trigger(
            model, p, tuple(features.split(",")))
    except (CsumnetError, ValueError) as e:
        _fail(e)
    _emit(trace.to_json_str() + "\n", out)


@attack.command("random-search")
@click.option("--model", "path", required=True, type=click.Path(exists=True))
@click.option("--budget", type=int, default=1_000_000)
@click.option("--seed", type=int, default=0)
@click.option("--out", default="-")
def attack_random_search(path, budget, seed, out):
    try:
        model = nn.load_model(path)
        r = backdoor.random_search_guaranteed(model, budget, seed)
    except (CsumnetError, ValueError) as e:
        _fail(e)
    _emit({"x": repr(r["x"]), "y": repr(r["y"]), "attempts": r["attempts"]}, out)


@main.command()
@click.option("--data", "path", required=True, type=click.Path(exists=True))
@click.option("--delta-r", type=float, default=defense.DEFAULT_DELTA_R)
@click.option("--radius", type=float, default=None)
@click.option("--out", default="-")
def defend(path, delta_r, radius, out):
    """Proximity defense: histograms, recommended radius, label correction."""
    try:
        d = datagen.from_csv(open(path).read())
        h = defense.pairwise_histograms(d.train, delta_r)
        r = radius if radius is not None else defense.select_radius(h)
        _, report = defense.robustify(d.train, d.test, r)
    except (CsumnetError, ValueError) as e:
        _fail(e)
    _emit({"histograms": h.to_json(), "radius": repr(r),
           "report": report.to_json()}, out)


@main.group()
def bench():
    """Benchmarks; timings are reported, never asserted."""


@bench.command("search")
@click.option("--m", type=int, required=True)
@click.option("--nodes", "n1", type=int, required=True)
@click.option("--runs", type=int, default=100)
@click.option("--sk", type=int, default=0)
@click.option("--seed", type=int, default=0)
@click.option("--budget", type=int, default=10_000_000)
@click.option("--out", default="-")
def bench_search(m, n1, runs, sk, seed, budget, out):
    """Attempt statistics for the guaranteed random-search activation."""
    try:
        cfg = _cfg(m, sk, 15, None)
        model = backdoor.plant(nn.init(nn.make_spec(2, [n1]), seed=seed), cfg)
    except (CsumnetError, ValueError) as e:
        _fail(e)
    attempts = []
    t0 = time.perf_counter()
    for i in range(runs):
        try:
            r = backdoor.random_search_guaranteed(model, budget, seed=seed + i)
        except CsumnetError as e:
            _fail(e)
        attempts.append(r["attempts"])
    elapsed = time.perf_counter() - t0
    total = sum(attempts)
    _emit({"m": m, "nodes": n1, "runs": runs,
           "mean_attempts": statistics.fmean(attempts),
           "stddev_attempts": statistics.pstdev(attempts),
           "seconds_total": elapsed,
           "seconds_per_evaluation": elapsed / total if total else None}, out)


@bench.command("wf2")
@click.option("--runs", type=int, default=3)
@click.option("--points", type=int, default=10)
@click.option("--seed", type=int, default=0)
@click.option("--out", default="-")
def bench_wf2(runs, points, seed, out):
    """Train-with-backdoor / ship-clean workflow; reports flip rates only."""
    try:
        r = backdoor.wf2_activation_rate(runs=runs, points_per_run=points,
                                         seed=seed)
    except (CsumnetError, ValueError) as e:
        _fail(e)
    _emit(r, out)


@main.command()
@click.argument("script", type=click.Path(exists=True))
@click.option("--out", default="-")
def replay(script, out):
    """Re-execute a recorded API script (list of {method, path, body})."""
    from fastapi.testclient import TestClient

    from .service import create_app
    try:
        steps = json.load(open(script))
    except ValueError as e:
        _fail(e)
    results = []
    with TestClient(create_app()) as client:
        sid = None
        for step in steps:
            path = step["path"]
            if sid is not None:
                path = path.replace("{session}", sid)
            resp = client.request(step["method"], path, json=step.get("body"))
            if resp.status_code >= 400:
                _fail(CsumnetError(f"{step['method']} {path} -> "
                                   f"{resp.status_code}: {resp.text}"))
            try:
                body = resp.json()
            except ValueError:
                body = resp.text
            if isinstance(body, dict) and "id" in body and path == "/sessions":
                sid = body["id"]
            results.append({"path": step["path"], "status": resp.status_code,
                            "body": body})
    _emit(results, out)


if __name__ == "__main__":
    main()
