"""Student/teacher weight coupling via an exponential moving average.

The teacher starts as an exact copy of the student, never receives
gradients, and after every optimizer step is pulled toward the student:
theta_teacher = eta * theta_teacher + (1 - eta) * theta_student.
"""

from dataclasses import dataclass

from .segnet import SegNet


def init_teacher(student):
    """Deep copy of the student with gradient tracking disabled."""
    return student.copy(requires_grad=False)


@dataclass
class EnsemblePair:
    student: SegNet
    teacher: SegNet
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.student.params.names() != self.teacher.params.names():
            raise ValueError("student and teacher parameter names differ")


def ema_update(pair):
    """Pull every teacher weight toward the student by (1 - eta)."""
    eta = pair.eta
    for name, t_teacher in pair.teacher.params.items():
        t_student = pair.student.params[name]
        if t_teacher.shape != t_student.shape:
            raise ValueError(f"shape mismatch on {name!r}: "
                             f"{t_teacher.shape} vs {t_student.shape}")
        t_teacher.data *= eta
        t_teacher.data += (1.0 - eta) * t_student.data
