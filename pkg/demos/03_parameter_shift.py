"""
Parameter-shift gradients
=========================

For half-angle rotations the derivative of any expectation value is
[f(theta + pi/2) - f(theta - pi/2)] / 2 exactly. Compare it with
central finite differences for a feature, a filter fidelity and the
full training objective.
"""
import numpy as np

from fvtrain.ansatz import build_random_ansatz, random_angles, run_filter
from fvtrain.grad import (
    feature_grad_fd,
    fidelity_grad_fd,
    numerical_gradient,
    param_shift_feature_grad,
    param_shift_fidelity_grad,
    total_gradient,
)
from fvtrain.qcnn import init_model

rng = np.random.default_rng(0)
spec, other = build_random_ansatz(1, 4, 2), build_random_ansatz(2, 4, 2)
params = random_angles(rng, spec.n_params)
patch = rng.uniform(size=4)
partner, _ = run_filter(other, random_angles(rng, other.n_params), patch)

# %% d<Z_q>/d theta_j and d fidelity / d theta_j
for j in range(3):
    ps = param_shift_feature_grad(spec, params, patch, j, qubit=0)
    fd = feature_grad_fd(spec, params, patch, j, qubit=0)
    print(f"feature  j={j}: shift {ps:+.10f}  fd {fd:+.10f}")
    ps = param_shift_fidelity_grad(spec, params, partner, patch, j)
    fd = fidelity_grad_fd(spec, params, partner, patch, j)
    print(f"fidelity j={j}: shift {ps:+.10f}  fd {fd:+.10f}")

# %% whole objective on a toy two-window model
model = init_model(3, image_shape=(2, 4))
images, labels = rng.uniform(size=(3, 2, 4)), np.array([0, 1, 1])
exact = total_gradient(model, images, labels, lam=0.5, form="similarity").flat()
approx = numerical_gradient(model, images, labels, lam=0.5, form="similarity").flat()
print(f"{exact.size} parameters, max |shift - fd| = {np.max(np.abs(exact - approx)):.2e}")
