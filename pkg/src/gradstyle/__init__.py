"""Gradient-domain image stylization.

A small convolutional network learns to map input-image gradients to
stylized gradients; a screened least-squares solve then rebuilds an
edge-preserving, color-faithful image around the original.
"""

from .errors import GradstyleError, NumericError, WeightFormatError
from .gradients import forward_gradients, gradient_adjoint, pack_field, split_field
from .layers import (AdamState, ConvLayer, adam_step, conv2d_backward,
                     conv2d_forward, pixel_shuffle, relu_backward,
                     relu_forward, space_to_depth)
from .losses import LossWeights, color_domain_loss, pixel_loss, total_loss
from .network import (NetworkWeights, build_network, load_checkpoint,
                      net_backward, net_forward, save_checkpoint)
from .pipeline import stylize_array
from .reconstruct import (ReconstructionProblem, apply_system,
                          dense_oracle_solve, reconstruct)
from .tensor import Tensor, add, mse, mul, scale, sub, sum_sq
from .trainer import PairDataset, TrainConfig, sample_patch_batch, train
from .vgg import (VggTrunk, features_conv33, load_vgg, make_random_trunk,
                  perceptual_loss, save_vgg)
from .video import FrameSequence, interframe_mse, stylize_sequence

__version__ = "0.1.0"
