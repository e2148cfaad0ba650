from .unet import NetworkSpec, build_unet, forward, init_weights, param_count
from .loss import dice_loss, dice_loss_grad
from .training import TrainConfig, backward, train
from .weights_io import load_weights, save_weights

__all__ = [
    "NetworkSpec",
    "TrainConfig",
    "backward",
    "build_unet",
    "dice_loss",
    "dice_loss_grad",
    "forward",
    "init_weights",
    "load_weights",
    "param_count",
    "save_weights",
    "train",
]
