from .tensor import (Tensor, Function, Tape, tensor, as_tensor, no_grad, is_grad_enabled,
                     precision, get_default_dtype, set_default_dtype)
from .functional import (add, sub, mul, div, scalar_mul, leaky_relu, tanh, softplus, reshape, concat,
                         expand, slice_, matmul, sum_, mean, std, conv2d, conv3d, upsample_nearest,
                         LEAKY_SLOPE, STD_EPS)
from .gradcheck import grad_check, numerical_gradient
