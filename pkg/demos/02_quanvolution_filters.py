"""
Random quanvolutional filters on an MNIST digit
================================================

Two random 4-qubit circuits slide over a 14x14 digit in 2x2 windows.
Each window yields four <Z> features per filter and one output state
per filter; the mean overlap of those states is what the fidelity
regularizer acts on.

Run from the repository root (uses data/mnist).
"""
import numpy as np

from fvtrain.data import load_mnist, preprocess
from fvtrain.qcnn import init_model, pairwise_fidelity_mean, predict, quanv_forward

train, _ = preprocess(load_mnist("data/mnist"), classes=(0, 1), train_n=20, test_n=10, seed=0)
image, label = train.images[0], train.labels[0]

# %% the model: two random ansatz filters plus a linear softmax head
model = init_model(seed=0)
for spec, params in model.filters:
    print(spec.to_text())
    print("angles:", np.round(params.angles, 3), "\n")

# %% one forward pass
out = quanv_forward(model, image)
print("windows per filter:", model.n_windows, " features:", out.features.shape)
fmap = out.features.reshape(model.n_filters, 7, 7, model.n_qubits)
print("filter 0, qubit 0 feature map:\n", np.round(fmap[0, :, :, 0], 2))

# %% filter similarity and prediction
print("mean pairwise fidelity:", round(pairwise_fidelity_mean(out), 4))
probs, _ = predict(model, image)
print("label", label, "probs", np.round(probs, 3))
