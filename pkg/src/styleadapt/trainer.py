"""Two-branch adaptation trainer.

Each step combines a supervised branch (source image, optionally pushed
toward the target appearance before the student scores it against its true
labels) with an unsupervised branch (target image re-styled with k source
looks, scored by the teacher, averaged, sharpened and thresholded into a
pseudo-label that supervises the student's view of the same image). The
student learns by gradient, the teacher trails it as an exponential moving
average, and only the student's own probability map ever carries gradients:
pseudo-labels, masks and class weights are all detached constants.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .augment import ColorJitterSpec, color_perturb, random_crop
from .ensemble import EnsemblePair, ema_update, init_teacher
from .metrics import ConfusionMatrix, iou
from .optim import make_optimizer
from .rng import make_streams
from .segnet import build_segnet
from .styler import generate
from .tensor import NumericsError, Tensor

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-12


@dataclass
class HyperParams:
    """Every scalar knob of the training recipe."""

    tau: float = 0.9            # pseudo-label confidence threshold
    eta: float = 0.999          # teacher EMA decay
    temp: float = 0.25          # sharpening temperature
    k: int = 4                  # style images per target perturbation
    lambda_u: float = 1.0       # unsupervised loss weight
    p_s2t: float = 0.5          # probability of source -> target translation
    p_t2s: float = 0.5          # probability of target -> source translation
    lambda_rw: float = 1.0      # reweighting scale
    gamma_rw: float = 0.5       # reweighting exponent
    epsilon: float = 1e-5       # moment guard inside the style network
    alpha_lo: float = 0.0       # blend coefficient drawn uniformly from
    alpha_hi: float = 1.0       # [alpha_lo, alpha_hi]
    gate_pre_sharpen: bool = True    # threshold the raw averaged map; gating the
                                     # sharpened map admits nearly every pixel
                                     # from step one and collapses training
    use_pseudo_label: bool = True    # off: soft-target consistency instead
    use_self_ensemble: bool = True   # off: student guides itself (detached)
    s2t: bool = True            # off: supervised branch never translates
    t2s: bool = True            # off: unsupervised branch disabled entirely

    def validate(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.temp <= 0:
            raise ValueError(f"temp must be positive, got {self.temp}")
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        for name in ("p_s2t", "p_t2s"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.gamma_rw < 0:
            raise ValueError(f"gamma_rw must be non-negative, got {self.gamma_rw}")
        if self.lambda_rw <= 0:
            raise ValueError(f"lambda_rw must be positive, got {self.lambda_rw}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 <= self.alpha_lo <= self.alpha_hi <= 1.0:
            raise ValueError("alpha bounds must satisfy 0 <= lo <= hi <= 1")
        return self


@dataclass
class ClassPriors:
    """Per-class pixel fraction on the labeled source set."""

    d: np.ndarray

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=np.float64)
        if (self.d < 0).any():
            raise ValueError("priors must be non-negative")
        if abs(self.d.sum() - 1.0) > 1e-9:
            raise ValueError(f"priors must sum to 1, got {self.d.sum()!r}")

    @property
    def degenerate(self):
        return bool((self.d == 0).any())


@dataclass
class StepRecord:
    step: int
    loss_s: float
    loss_u: float
    loss_total: float
    mask_frac: float


@dataclass
class EvalRecord:
    step: int
    loss_s: float
    loss_u: float
    mask_frac: float
    miou_student: float
    miou_teacher: float


@dataclass
class TrainerState:
    pair: EnsemblePair
    styler: object
    priors: ClassPriors
    hp: HyperParams
    opt: object
    streams: dict
    jitter: ColorJitterSpec = field(default_factory=ColorJitterSpec)
    crop: int = 64
    step: int = 0


def make_trainer_state(num_classes, styler, priors, hp, seed, opt_kind="adam",
                       lr=1e-3, momentum=0.9, beta2=0.999, weight_decay=5e-4,
                       crop=64, jitter=None):
    """Fresh student/teacher pair wired to a frozen style network."""
    hp.validate()
    student = build_segnet(num_classes, seed)
    teacher = init_teacher(student)
    pair = EnsemblePair(student=student, teacher=teacher, eta=hp.eta)
    opt = make_optimizer(opt_kind, student.params, lr=lr, momentum=momentum,
                         beta2=beta2, weight_decay=weight_decay)
    styler.freeze()
    return TrainerState(pair=pair, styler=styler, priors=priors, hp=hp, opt=opt,
                        streams=make_streams(seed),
                        jitter=(jitter or ColorJitterSpec()).validate(),
                        crop=crop)


# -- branch operations --------------------------------------------------------


def translate_source(x_s, y_s, target_pool, state):
    """Jitter a source image and, with probability p_s2t, restyle it toward
    a random target image under a uniform blend coefficient. Labels pass
    through untouched."""
    if not target_pool:
        raise ValueError("empty target pool")
    hp = state.hp
    jittered = color_perturb(x_s, state.jitter, state.streams["augment"])
    p = hp.p_s2t if hp.s2t else 0.0
    if state.streams["translate"].bernoulli(p):
        style = target_pool[int(state.streams["translate"].integers(0, len(target_pool)))]
        alpha = float(state.streams["translate"].uniform(hp.alpha_lo, hp.alpha_hi))
        return generate(jittered, style, alpha, state.styler), y_s
    return jittered, y_s


def supervised_loss(p_s, y_s):
    """Mean per-pixel cross entropy of a probability map against labels."""
    _, c, h, w = p_s.shape
    y = np.asarray(y_s)
    if y.shape != (h, w):
        raise ValueError(f"label map {y.shape} does not match prediction {(h, w)}")
    if y.min() < 0 or y.max() >= c:
        raise ValueError(f"label values must lie in [0, {c})")
    onehot = np.eye(c, dtype=p_s.dtype)[y].transpose(2, 0, 1)[None]
    ll = p_s.clip(LOG_FLOOR, 1.0).log()
    return (ll * onehot).sum() * (-1.0 / (h * w))


def perturb_target(x_t, source_pool, state):
    """The k style-translated views of one jittered target image.

    With probability p_t2s the shared jittered image is restyled with k
    distinct source images under independent blend draws; otherwise the
    single jittered image is the whole set.
    """
    if not source_pool:
        raise ValueError("empty source pool")
    hp = state.hp
    jittered = color_perturb(x_t, state.jitter, state.streams["augment"])
    if not state.streams["translate"].bernoulli(hp.p_t2s):
        return [jittered]
    replace = hp.k > len(source_pool)
    if replace:
        logger.warning("k=%d exceeds source pool size %d; sampling with replacement",
                       hp.k, len(source_pool))
    picks = state.streams["translate"].choice(len(source_pool), hp.k, replace=replace)
    views = []
    for idx in picks:
        alpha = float(state.streams["translate"].uniform(hp.alpha_lo, hp.alpha_hi))
        views.append(generate(jittered, source_pool[int(idx)], alpha, state.styler))
    return views


def pseudo_probs(net, images):
    """Mean probability map of the views, in fixed index order."""
    if not images:
        raise ValueError("pseudo_probs needs at least one image")
    shape = images[0].shape
    total = None
    for img in images:
        if img.shape != shape:
            raise ValueError(f"view shape {img.shape} disagrees with {shape}")
        p = net.forward(img).data[0]
        total = p.copy() if total is None else total + p
    return total / len(images)


def sharpen(p, temp):
    """Temperature-sharpened distribution along class axis 0; zeros stay zero."""
    if temp <= 0:
        raise ValueError(f"temperature must be positive, got {temp}")
    powered = np.asarray(p) ** (1.0 / temp)
    return powered / powered.sum(axis=0, keepdims=True)


def make_pseudo_label(p, tau):
    """Per-pixel argmax (first index on ties) and its confidence gate."""
    p = np.asarray(p)
    q = p.argmax(axis=0)
    mask = p.max(axis=0) >= tau
    return q, mask


def class_weights(priors, lambda_rw, gamma_rw):
    """Inverse-prior class weights 1 / (lambda * d^gamma)."""
    d = priors.d.copy()
    if priors.degenerate and gamma_rw > 0:
        nonzero = d[d > 0]
        logger.warning("degenerate class priors %s; substituting min nonzero %.3g",
                       d.tolist(), nonzero.min())
        d[d == 0] = nonzero.min()
    return 1.0 / (lambda_rw * d ** gamma_rw)


def unsupervised_loss(p_t, q, mask, w):
    """Masked, class-reweighted cross entropy against a hard pseudo-label.

    Gradients flow only through p_t; q, mask and w enter as constants.
    Unmasked pixels contribute exactly zero.
    """
    _, c, h, w_dim = p_t.shape
    q = np.asarray(q)
    mask = np.asarray(mask)
    if q.shape != (h, w_dim) or mask.shape != (h, w_dim):
        raise ValueError(f"pseudo-label shape {q.shape} / mask {mask.shape} "
                         f"do not match prediction {(h, w_dim)}")
    wmap = np.asarray(w, dtype=np.float64)[q] * mask
    onehot = np.eye(c, dtype=p_t.dtype)[q].transpose(2, 0, 1)
    target = (onehot * wmap[None]).astype(p_t.dtype)[None]
    ll = p_t.clip(LOG_FLOOR, 1.0).log()
    return (ll * target).sum() * (-1.0 / (h * w_dim))


def _soft_consistency_loss(p_t, soft_target, mask, w):
    """Pseudo-label-free variant: the sharpened map itself is the target."""
    _, c, h, w_dim = p_t.shape
    wmap = (np.asarray(w)[:, None, None] * soft_target) * mask[None]
    ll = p_t.clip(LOG_FLOOR, 1.0).log()
    return (ll * wmap.astype(p_t.dtype)[None]).sum() * (-1.0 / (h * w_dim))


# -- the step and the loop ----------------------------------------------------


def train_step(batch_s, batch_t, state, source_pool, target_pool):
    """One combined update; returns the step's loss record.

    batch_s is an (image, label) pair, batch_t a bare image, both already
    cropped to the training size. The pools supply full-size style images.
    """
    hp = state.hp
    x_s, y_s = batch_s

    # supervised branch
    x_hat_s, y_s = translate_source(x_s, y_s, target_pool, state)
    p_s = state.pair.student.forward(x_hat_s)
    l_s = supervised_loss(p_s, y_s)
    if not np.isfinite(l_s.data).all():
        raise NumericsError("supervised branch produced a non-finite loss")

    # unsupervised branch
    unsup_active = hp.t2s and hp.lambda_u != 0.0
    if unsup_active:
        views = perturb_target(batch_t, source_pool, state)
        guide = state.pair.teacher if hp.use_self_ensemble else state.pair.student
        p_l = pseudo_probs(guide, views)
        p_sharp = sharpen(p_l, hp.temp)
        gate_source = p_l if hp.gate_pre_sharpen else p_sharp
        q, _ = make_pseudo_label(p_sharp, hp.tau)
        mask = gate_source.max(axis=0) >= hp.tau
        w = class_weights(state.priors, hp.lambda_rw, hp.gamma_rw)
        student_view = color_perturb(batch_t, state.jitter, state.streams["augment"])
        p_t = state.pair.student.forward(student_view)
        if hp.use_pseudo_label:
            l_u = unsupervised_loss(p_t, q, mask, w)
        else:
            l_u = _soft_consistency_loss(p_t, p_sharp, mask, w)
        if not np.isfinite(l_u.data).all():
            raise NumericsError("unsupervised branch produced a non-finite loss")
        total = l_s + l_u * hp.lambda_u
        loss_u_val = l_u.item()
        mask_frac = float(mask.mean())
    else:
        total = l_s
        loss_u_val = 0.0
        mask_frac = 0.0

    total.backward()
    state.opt.step()
    if hp.use_self_ensemble:
        ema_update(state.pair)
    state.step += 1
    return StepRecord(step=state.step, loss_s=l_s.item(), loss_u=loss_u_val,
                      loss_total=total.item(), mask_frac=mask_frac)


def evaluate_miou(net, scenes):
    """Mean IoU of a network over labeled scenes."""
    cm = ConfusionMatrix(net.num_classes)
    for scene in scenes:
        pred = net.forward(scene.image).data[0].argmax(axis=0)
        cm.accumulate(pred, scene.label)
    return iou(cm)[1]


class _CyclicSampler:
    """Shuffled cyclic index stream over a dataset."""

    def __init__(self, n, rng):
        self.n = n
        self.rng = rng
        self._order = []

    def next(self):
        if not self._order:
            self._order = list(self.rng.permutation(self.n))
        return self._order.pop(0)


def train_loop(source_set, target_set, state, steps, eval_every, val_set,
               checkpoint_path=None):
    """Run train_step over shuffled cyclic batches, evaluating periodically.

    Every eval_every steps both nets are scored on val_set and an EvalRecord
    (with losses averaged since the previous evaluation) is appended. The
    best-teacher weights seen at evaluations are checkpointed when a path is
    given. Returns the evaluation history.
    """
    if not source_set or not target_set:
        raise ValueError("source and target sets must be non-empty")
    source_pool = [s.image for s in source_set]
    target_pool = [t.image for t in target_set]
    sampler_s = _CyclicSampler(len(source_set), state.streams["data"])
    sampler_t = _CyclicSampler(len(target_set), state.streams["data"])
    crop = state.crop

    history = []
    window = []
    best_teacher = -1.0
    for _ in range(steps):
        scene_s = source_set[sampler_s.next()]
        scene_t = target_set[sampler_t.next()]
        img_s, lab_s = random_crop(scene_s.image, scene_s.label, crop, crop,
                                   state.streams["augment"])
        img_t, _ = random_crop(scene_t.image, None, crop, crop,
                               state.streams["augment"])
        record = train_step((img_s, lab_s), img_t, state, source_pool, target_pool)
        window.append(record)

        if eval_every and state.step % eval_every == 0:
            miou_s = evaluate_miou(state.pair.student, val_set)
            miou_t = evaluate_miou(state.pair.teacher, val_set)
            history.append(EvalRecord(
                step=state.step,
                loss_s=float(np.mean([r.loss_s for r in window])),
                loss_u=float(np.mean([r.loss_u for r in window])),
                mask_frac=float(np.mean([r.mask_frac for r in window])),
                miou_student=miou_s,
                miou_teacher=miou_t,
            ))
            window = []
            if checkpoint_path is not None and miou_t > best_teacher:
                best_teacher = miou_t
                from .checkpoint import save_checkpoint
                save_checkpoint(checkpoint_path, state.pair.teacher.params)
    return history
