from .modules import Episode, GlimpseSensor, RamafAgent  # noqa: F401
from .reward import RewardBreakdown, compute_rewards  # noqa: F401
