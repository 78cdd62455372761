#!/usr/bin/env python3
# Copyright 2026 The twostage Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the tiny ONNX graphs used by the external-adapter tests.

All graphs take a 1x3x8x8 float input named "input". Weights are seeded, so
re-running produces identical files.

Next to each graph a <name>.expected file holds the outputs for a reference
input, computed here with numpy: a uniform RGB (200, 100, 50) frame normalized
with the default ImageNet mean/std. The adapter tests compare against it.

    python3 tools/make_test_models.py tests/data/models
"""
import argparse
import pathlib

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

H = W = 8
D = 3 * H * W
REFERENCE_RGB = (200, 100, 50)
MEAN = (0.485, 0.456, 0.406)
STD = (0.229, 0.224, 0.225)


def reference_input():
    chans = [np.full((H, W), (v / 255.0 - m) / s) for v, m, s in zip(REFERENCE_RGB, MEAN, STD)]
    return np.stack(chans).astype(np.float32).reshape(1, D)


def _write_expected(path, outputs):
    lines = []
    for name, values in outputs:
        flat = np.asarray(values, np.float64).ravel()
        lines.append(name + "\t" + ",".join(repr(float(v)) for v in flat))
    path.with_suffix(".expected").write_text("\n".join(lines) + "\n")


def _save(nodes, inits, outputs, path):
    graph = helper.make_graph(
        nodes, path.stem,
        [helper.make_tensor_value_info("input", TensorProto.FLOAT, [1, 3, H, W])],
        [helper.make_tensor_value_info(n, TensorProto.FLOAT, s) for n, s in outputs],
        inits)
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 11)],
                              producer_name="twostage-tests")
    model.ir_version = 6
    onnx.checker.check_model(model)
    onnx.save(model, str(path))


def _dense(name, n_out, rng, scale=0.01, bias=None):
    w = (rng.normal(size=(n_out, D)) * scale).astype(np.float32)
    b = np.zeros(n_out, np.float32) if bias is None else np.asarray(bias, np.float32)
    inits = [numpy_helper.from_array(w, name + "_w"), numpy_helper.from_array(b, name + "_b")]
    node = helper.make_node("Gemm", ["flat", name + "_w", name + "_b"], [name], transB=1)
    return node, inits, lambda x: x.astype(np.float64) @ w.T.astype(np.float64) + b


def classifier(n_out, path):
    rng = np.random.default_rng(n_out)
    gemm, inits, f = _dense("logits", n_out, rng, bias=np.arange(n_out) * 0.1)
    flat = helper.make_node("Flatten", ["input"], ["flat"], axis=1)
    _save([flat, gemm], inits, [("logits", [1, n_out])], path)
    _write_expected(path, [("logits", f(reference_input()))])


def features(n_out, path):
    rng = np.random.default_rng(1000 + n_out)
    gemm, inits, f = _dense("pre", n_out, rng, scale=0.1)
    flat = helper.make_node("Flatten", ["input"], ["flat"], axis=1)
    relu = helper.make_node("Relu", ["pre"], ["features"])
    _save([flat, gemm, relu], inits, [("features", [1, n_out])], path)
    _write_expected(path, [("features", np.maximum(f(reference_input()), 0.0))])


def detector(path):
    # Two fixed normalized boxes, scores from a sigmoid, class ids 0 and 1.
    rng = np.random.default_rng(7)
    boxes, b_inits, fb = _dense("boxes", 8, rng, scale=0.0,
                                bias=[0.1, 0.2, 0.5, 0.9, 0.4, 0.1, 0.8, 0.6])
    logits, s_inits, fs = _dense("score_logits", 2, rng, scale=0.01, bias=[1.5, -0.5])
    classes, c_inits, fc = _dense("classes", 2, rng, scale=0.0, bias=[0.0, 1.0])
    flat = helper.make_node("Flatten", ["input"], ["flat"], axis=1)
    sig = helper.make_node("Sigmoid", ["score_logits"], ["scores"])
    _save([flat, boxes, logits, sig, classes], b_inits + s_inits + c_inits,
          [("boxes", [1, 8]), ("scores", [1, 2]), ("classes", [1, 2])], path)
    x = reference_input()
    _write_expected(path, [("boxes", fb(x)), ("scores", 1.0 / (1.0 + np.exp(-fs(x)))), ("classes", fc(x))])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", type=pathlib.Path)
    out = ap.parse_args().out_dir
    out.mkdir(parents=True, exist_ok=True)
    classifier(44, out / "classifier44.onnx")
    classifier(80, out / "classifier80.onnx")
    features(16, out / "features16.onnx")
    detector(out / "detector2.onnx")


if __name__ == "__main__":
    main()
