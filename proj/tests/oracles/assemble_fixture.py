#!/usr/bin/env python3
"""Independent construction of the stacked system for a 6-row fixture.

Builds the two-block regression system (treated/outcome block over the
masked rows, score block over all rows) directly from its defining
equations using scipy's BSpline, and prints the matrices for freezing
into tests/test_estimator.cpp.  Run: python3 assemble_fixture.py
"""
import numpy as np
from scipy.interpolate import BSpline

tau, K = 1.0, 1          # dim = K + 3 = 4, no interior knots
deg = 3
knots = np.array([-tau] * (deg + 1) + [tau] * (deg + 1))
dim = K + 3
scale = np.sqrt(K / (2 * tau))


def basis(x):
    if x < -tau or x > tau:
        return np.zeros(dim)
    return scale * np.array(
        [float(BSpline(knots, np.eye(dim)[j], deg, extrapolate=False)(x)) for j in range(dim)]
    )


def basis_deriv(x):
    if x < -tau or x > tau:
        return np.zeros(dim)
    out = np.empty(dim)
    for j in range(dim):
        d = BSpline(knots, np.eye(dim)[j], deg, extrapolate=False).derivative()
        v = d(np.clip(x, -tau, tau))
        out[j] = float(v)
    return scale * out


# 6-row fixture, p1 = p2 = 1
y = np.array([0.5, -1.2, 0.3, 2.0, -0.7, 1.1])
q = np.array([0.4, -2.0, 0.1, 1.5, -0.3, 0.9])
X = np.array([[0.2], [-1.0], [0.5], [1.3], [-0.4], [0.8]])
Z = np.array([[1.0], [-0.5], [0.3], [0.7], [-1.2], [0.1]])
gamma_hat = np.array([0.6])
omega_hat = np.array([0.3, -0.1, 0.2, 0.05])

S = (q >= 0).astype(float)
eta = q - Z @ gamma_hat
mask = np.abs(eta) <= tau
n3 = int(mask.sum())
n = len(y)

bprime = np.array([basis_deriv(e) @ omega_hat for e in eta])
W1 = np.column_stack([S[mask], X[mask, 0], bprime[mask] * Z[mask, 0]])
W2 = np.column_stack([np.zeros(n), np.zeros(n), -Z[:, 0]])
W = np.vstack([W1, W2])
Na = np.vstack([np.array([basis(e) for e in eta[mask]]), np.zeros((n, dim))])
resp = np.concatenate([y[mask], eta])

np.set_printoptions(precision=17)
print("mask:", mask.astype(int))
print("eta:", repr(eta))
print("W:", repr(W))
print("Na:", repr(Na))
print("resp:", repr(resp))
