#!/usr/bin/env python3
"""A walk through the float64 autodiff core.

Builds a tiny computation, runs the backward pass, and confirms one
gradient entry against a central finite difference.
"""

import numpy as np

from wingraph.tensor import Parameter, Tensor, backward, hadamard, matmul, sigmoid, sum_all

rng = np.random.default_rng(0)

# A small recorded computation: loss = sum(P .* sigmoid(X @ W))
x = Tensor(rng.uniform(-1, 1, (3, 4)), requires_grad=True)
w = Parameter(rng.uniform(-1, 1, (4, 2)), "w")
proj = Tensor(rng.uniform(-1, 1, (3, 2)))

loss = sum_all(hadamard(sigmoid(matmul(x, w)), proj))
print(f"loss = {loss.item():.6f}")

backward(loss)
print("dL/dW:\n", w.grad)

# Verify one entry with a central finite difference
h = 1e-5
i, j = 2, 1
orig = w.data[i, j]
w.data[i, j] = orig + h
up = sum_all(hadamard(sigmoid(matmul(x, w)), proj)).item()
w.data[i, j] = orig - h
down = sum_all(hadamard(sigmoid(matmul(x, w)), proj)).item()
w.data[i, j] = orig

numeric = (up - down) / (2 * h)
print(f"analytic dL/dW[{i},{j}] = {w.grad[i, j]:.10f}")
print(f"numeric  dL/dW[{i},{j}] = {numeric:.10f}")
assert abs(w.grad[i, j] - numeric) < 1e-8

# Gradients accumulate until reset
backward(loss)
print("after second backward, grad doubled:", np.allclose(w.grad[i, j], 2 * numeric, atol=1e-7))
w.zero_grad()
print("after zero_grad, grad is zero:", bool((w.grad == 0).all()))
