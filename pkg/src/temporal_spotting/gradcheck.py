"""Finite-difference verification of every hand-derived gradient."""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .model import ModelConfig, SpottingModel, bce_loss
from .numerics import (
    finite_diff_grad,
    l2_normalize,
    l2_normalize_backward,
    relative_error,
    softmax,
    softmax_backward,
)
from .pooling import (
    POOL_KINDS,
    ClusterParams,
    PoolSpec,
    TemporalWindow,
    init_cluster_params,
    pool_backward,
    pool_forward,
    soft_assign,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-4


@dataclass
class GradCheckReport:
    """Worst relative error seen per component over all instances."""

    errors: dict[str, float] = field(default_factory=dict)
    instances: int = 0
    tolerance: float = DEFAULT_TOLERANCE

    def record(self, component: str, error: float) -> None:
        self.errors[component] = max(error, self.errors.get(component, 0.0))

    @property
    def passed(self) -> bool:
        return all(e <= self.tolerance for e in self.errors.values())

    @property
    def failures(self) -> list[str]:
        return sorted(name for name, e in self.errors.items() if e > self.tolerance)

    def to_dict(self) -> dict:
        return {
            "instances": self.instances,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "max_relative_error": dict(sorted(self.errors.items())),
        }


def _compare(analytic: np.ndarray, f: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    return relative_error(analytic, finite_diff_grad(f, x))


def _check_softmax(rng: np.random.Generator, report: GradCheckReport) -> None:
    v = rng.normal(size=(3, 5))
    r = rng.normal(size=v.shape)
    analytic = softmax_backward(softmax(v), r)
    report.record("softmax", _compare(analytic, lambda t: float(np.sum(r * softmax(t))), v))


def _check_l2(rng: np.random.Generator, report: GradCheckReport) -> None:
    # intra: rows of a K×D descriptor; global: the flattened vector
    for name, shape in (("l2_normalize.intra", (2, 4, 3)), ("l2_normalize.global", (2, 12))):
        v = rng.normal(size=shape)
        r = rng.normal(size=shape)
        analytic = l2_normalize_backward(v, r, axis=-1)
        report.record(name, _compare(analytic, lambda t: float(np.sum(r * l2_normalize(t, axis=-1))), v))


def _check_soft_assign(rng: np.random.Generator, report: GradCheckReport) -> None:
    n, k, d = rng.integers(2, 6), rng.integers(1, 4), rng.integers(2, 5)
    x = rng.normal(size=(n, d))
    params = ClusterParams(w=rng.normal(size=(k, d)), b=rng.normal(size=k))
    r = rng.normal(size=(n, k))
    d_logits = softmax_backward(soft_assign(x, params), r)

    def loss_x(t):
        return float(np.sum(r * soft_assign(t, params)))

    def loss_w(t):
        return float(np.sum(r * soft_assign(x, ClusterParams(w=t, b=params.b))))

    def loss_b(t):
        return float(np.sum(r * soft_assign(x, ClusterParams(w=params.w, b=t))))

    report.record("soft_assign.x", _compare(d_logits @ params.w, loss_x, x))
    report.record("soft_assign.w", _compare(d_logits.T @ x, loss_w, params.w))
    report.record("soft_assign.b", _compare(d_logits.sum(axis=0), loss_b, params.b))


def _check_pool(rng: np.random.Generator, spec: PoolSpec, report: GradCheckReport) -> None:
    n, d = int(rng.integers(2, 7)), int(rng.integers(2, 5))
    x = rng.normal(size=(2, n, d))
    params: tuple[ClusterParams, ...] = ()
    if spec.uses_clusters:
        params = tuple(
            init_cluster_params(rng, k, d, spec.kind) for k in spec.head_clusters()
        )
        # random biases so the softmax is not uniform
        params = tuple(
            ClusterParams(w=p.w, b=None if p.b is None else rng.normal(size=p.b.shape), c=p.c)
            for p in params
        )
    out = pool_forward(x, spec, params)
    r = rng.normal(size=out.vector.shape)
    grad_x, grad_params = pool_backward(out.cache, r)

    def loss(t, ps=params):
        return float(np.sum(r * pool_forward(t, spec, ps).vector))

    report.record(f"{spec.label}.x", _compare(grad_x, loss, x))
    for head, (p, g) in enumerate(zip(params, grad_params, strict=True)):
        for key, value in p.arrays().items():

            def loss_p(t, head=head, key=key):
                replaced = list(params)
                arrays = dict(params[head].arrays())
                arrays[key] = t
                replaced[head] = ClusterParams(**arrays)
                return loss(x, tuple(replaced))

            report.record(f"{spec.label}.{key}", _compare(g.arrays()[key], loss_p, value))


def _tiny_model(rng: np.random.Generator, spec: PoolSpec, use_projection: bool) -> SpottingModel:
    n = 2 * int(rng.integers(1, 4))
    config = ModelConfig(
        input_dim=int(rng.integers(2, 5)),
        reduced_dim=int(rng.integers(2, 4)),
        pool=spec,
        num_classes=3,
        dropout=0.0,
        window=TemporalWindow(frame_rate=1.0, before_s=n / 2, after_s=n / 2),
        use_projection=use_projection,
    )
    model = SpottingModel.create(config, rng)
    model.set_params({name: rng.normal(scale=0.5, size=v.shape) for name, v in model.params.items()})
    return model


def _check_model(rng: np.random.Generator, spec: PoolSpec, report: GradCheckReport) -> None:
    model = _tiny_model(rng, spec, use_projection=True)
    cfg = model.config
    x = rng.normal(size=(2, cfg.window.frames, cfg.input_dim))
    y = (rng.random((2, cfg.num_classes)) < 0.5).astype(np.float64)
    _, cache = model.forward(x)
    grads = model.backward(cache, y)

    for name in ("projection.weight", "projection.bias", "classifier.weight", "classifier.bias"):
        original = model.params[name]

        def loss(t, name=name):
            trial = SpottingModel(cfg, {**model.params, name: t})
            return bce_loss(trial.predict(x), y)

        report.record(f"model.{name}", _compare(grads[name], loss, original))


def _check_bce(rng: np.random.Generator, report: GradCheckReport) -> None:
    p = rng.uniform(0.05, 0.95, size=(3, 4))
    y = (rng.random(p.shape) < 0.5).astype(np.float64)
    analytic = (p - y) / (p * (1.0 - p) * p.size)
    report.record("bce", _compare(analytic, lambda t: bce_loss(t, y), p))


def run_suite(seed: int = 0, instances: int = 20, tolerance: float = DEFAULT_TOLERANCE) -> GradCheckReport:
    """
    Check every differentiable component on ``instances`` random tiny problems.

    Components: softmax, both L2 normalizations, soft assignment, every pooling
    kind with and without the temporal split (w.r.t. features and each
    parameter), the projection and classifier inside a full model, and BCE.

    Returns:
        Report with the worst relative error per component
    """
    rng = np.random.default_rng(seed)
    report = GradCheckReport(tolerance=tolerance)
    specs = [
        PoolSpec(kind=kind, temporally_aware=aware, clusters=int(rng.integers(2, 5)))
        for kind in POOL_KINDS
        for aware in (False, True)
    ]
    for _ in range(instances):
        _check_softmax(rng, report)
        _check_l2(rng, report)
        _check_soft_assign(rng, report)
        for spec in specs:
            _check_pool(rng, spec, report)
        _check_model(rng, specs[int(rng.integers(len(specs)))], report)
        _check_bce(rng, report)
        report.instances += 1
    worst = max(report.errors, key=report.errors.get)
    logger.info(
        "gradcheck instances=%d worst=%s error=%.2e passed=%s",
        instances,
        worst,
        report.errors[worst],
        report.passed,
    )
    return report


def format_report(report: GradCheckReport) -> str:
    width = max(len(name) for name in report.errors)
    lines = [
        f"{name:<{width}}  {error:.2e}  {'ok' if error <= report.tolerance else 'FAIL'}"
        for name, error in sorted(report.errors.items())
    ]
    verdict = "all components within" if report.passed else "FAILED: above"
    lines.append(f"{verdict} {report.tolerance:.0e} over {report.instances} instances")
    return "\n".join(lines)
