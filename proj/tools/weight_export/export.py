#!/usr/bin/env python3
"""Export the five-stage feature trunk and LPIPS linear weights to a FLPW archive.

Writes `<out>/weights.flpw` plus parity fixtures under `<out>/fixtures/parity/`
recorded with the PyTorch `lpips` package. The C++ test suite consumes the
committed output; this script is only needed to regenerate it.

    python3 export.py --out ../../data
    python3 export.py --out ../../data --alexnet alexnet-owt-7be5be79.pth
"""

import argparse
import json
import pathlib
import struct
import sys

import numpy as np
import torch

import lpips

SEED = 20221017
MAGIC = b"FLPW"
VERSION = 1

# (name, out_ch, in_ch, k, stride, pad, pool_before)
STAGES = [
    ("conv1", 64, 3, 11, 4, 2, False),
    ("conv2", 192, 64, 5, 1, 2, True),
    ("conv3", 384, 192, 3, 1, 1, True),
    ("conv4", 256, 384, 3, 1, 1, False),
    ("conv5", 256, 256, 3, 1, 1, False),
]
# index of each conv inside torchvision's alexnet.features
TORCHVISION_IDX = [0, 3, 6, 8, 10]


def synthetic_trunk():
    rng = np.random.RandomState(SEED)
    params = {}
    for name, oc, ic, k, _, _, _ in STAGES:
        fan_in = ic * k * k
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(oc, ic, k, k))
        b = rng.normal(0.0, 0.01, size=(oc,))
        params[name + ".weight"] = w.astype(np.float32)
        params[name + ".bias"] = b.astype(np.float32)
    return params


def torchvision_trunk(path):
    state = torch.load(path, map_location="cpu")
    params = {}
    for (name, oc, ic, k, _, _, _), idx in zip(STAGES, TORCHVISION_IDX):
        w = state["features.%d.weight" % idx].numpy().astype(np.float32)
        b = state["features.%d.bias" % idx].numpy().astype(np.float32)
        if w.shape != (oc, ic, k, k):
            sys.exit("unexpected shape for %s: %s" % (name, w.shape))
        params[name + ".weight"] = w
        params[name + ".bias"] = b
    return params


def build_model(params):
    model = lpips.LPIPS(net="alex", pretrained=True, pnet_rand=True, verbose=False)
    model.eval()
    convs = [model.net.slice1._modules["0"], model.net.slice2._modules["3"],
             model.net.slice3._modules["6"], model.net.slice4._modules["8"],
             model.net.slice5._modules["10"]]
    with torch.no_grad():
        for (name, *_), conv in zip(STAGES, convs):
            conv.weight.copy_(torch.from_numpy(params[name + ".weight"]))
            conv.bias.copy_(torch.from_numpy(params[name + ".bias"]))
    return model


def manifest():
    layers = []
    for name, oc, ic, k, stride, pad, pool in STAGES:
        if pool:
            layers.append({"op": "maxpool", "kernel": [3, 3], "stride": 2, "padding": 0, "tap": False})
        layers.append({"op": "conv", "weight": name + ".weight", "bias": name + ".bias",
                       "kernel": [oc, ic, k, k], "stride": stride, "padding": pad, "tap": False})
        layers.append({"op": "relu", "tap": True})
    return {
        "trunk": "alexnet-5stage",
        "layers": layers,
        "linear": ["lin%d.weight" % (i + 1) for i in range(len(STAGES))],
        "normalization": {"shift": "norm.shift", "scale": "norm.scale"},
    }


def write_container(path, entries, manifest_obj):
    out = bytearray()
    out += MAGIC
    out += struct.pack("<II", VERSION, len(entries))
    for name, arr in entries:
        arr = np.ascontiguousarray(arr, dtype="<f4")
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded)) + encoded
        out += struct.pack("<BB", 0, arr.ndim)
        for d in arr.shape:
            out += struct.pack("<I", d)
        out += arr.tobytes()
    text = json.dumps(manifest_obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out += struct.pack("<I", len(text)) + text
    pathlib.Path(path).write_bytes(bytes(out))


def write_ppm(path, img):
    h, w, _ = img.shape
    pathlib.Path(path).write_bytes(b"P6\n%d %d\n255\n" % (w, h) + img.astype(np.uint8).tobytes())


def smooth_noise(rng, h, w, sigma):
    base = rng.rand(h, w, 3)
    radius = int(3 * sigma)
    x = np.arange(-radius, radius + 1)
    kern = np.exp(-x * x / (2 * sigma * sigma))
    kern /= kern.sum()
    for axis in (0, 1):
        base = np.apply_along_axis(lambda v: np.convolve(np.pad(v, radius, mode="wrap"), kern, "valid"), axis, base)
    base = (base - base.min()) / (base.max() - base.min())
    return base


def make_images(rng, h, w):
    texture = smooth_noise(rng, h, w, 2.0)
    yy, xx = np.mgrid[0:h, 0:w]
    disk = ((yy - h * 0.45) ** 2 + (xx - w * 0.55) ** 2) < (min(h, w) * 0.25) ** 2
    img = 0.6 * texture + 0.4 * np.stack([xx / w, yy / h, 0.5 * np.ones_like(xx)], axis=-1)
    img[disk] = 0.5 * img[disk] + 0.5 * np.array([0.9, 0.2, 0.1])
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def distortions(rng, ref):
    noisy = np.clip(ref.astype(np.float64) + rng.normal(0, 12.0, ref.shape), 0, 255).round().astype(np.uint8)
    k = np.ones(5) / 5.0
    blurred = ref.astype(np.float64)
    for axis in (0, 1):
        blurred = np.apply_along_axis(lambda v: np.convolve(np.pad(v, 2, mode="edge"), k, "valid"), axis, blurred)
    blurred = blurred.round().astype(np.uint8)
    shifted = np.roll(ref, shift=(1, 2), axis=(0, 1))
    return [("pair0", noisy), ("pair1", blurred), ("pair2", shifted), ("pair3", ref.copy())]


def to_tensor(img):
    t = torch.from_numpy(img.astype(np.float32) / np.float32(255.0)).permute(2, 0, 1).unsqueeze(0)
    return t * 2.0 - 1.0


def taps(model, img):
    with torch.no_grad():
        feats = model.net.forward(model.scaling_layer(to_tensor(img)))
    return [f[0].numpy().astype(np.float32) for f in feats]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True)
    parser.add_argument("--alexnet", help="torchvision alexnet state dict (.pth)")
    args = parser.parse_args()

    torch.set_num_threads(1)
    out = pathlib.Path(args.out)
    parity = out / "fixtures" / "parity"
    parity.mkdir(parents=True, exist_ok=True)

    params = torchvision_trunk(args.alexnet) if args.alexnet else synthetic_trunk()
    model = build_model(params)

    entries = []
    for name, *_ in STAGES:
        entries.append((name + ".weight", params[name + ".weight"]))
        entries.append((name + ".bias", params[name + ".bias"]))
    for i, lin in enumerate(model.lins):
        w = lin.model[-1].weight.detach().numpy().reshape(-1).astype(np.float64)
        if (w < 0).any():
            sys.exit("negative linear weight in lin%d" % (i + 1))
        entries.append(("lin%d.weight" % (i + 1), np.sqrt(w).astype(np.float32)))
    entries.append(("norm.shift", model.scaling_layer.shift.numpy().reshape(-1)))
    entries.append(("norm.scale", model.scaling_layer.scale.numpy().reshape(-1)))
    write_container(out / "weights.flpw", entries, manifest())

    rng = np.random.RandomState(SEED + 1)
    frame0 = make_images(rng, 80, 96)
    write_ppm(parity / "frame0.ppm", frame0)
    write_container(parity / "frame0_taps.flpw",
                    [("tap%d" % (i + 1), t) for i, t in enumerate(taps(model, frame0))],
                    {"kind": "taps"})

    ref = make_images(rng, 72, 88)
    write_ppm(parity / "ref.ppm", ref)
    scores = {}
    for name, dis in distortions(rng, ref):
        write_ppm(parity / ("%s_dis.ppm" % name), dis)
        with torch.no_grad():
            score = model.forward(to_tensor(ref), to_tensor(dis)).item()
        scores[name] = score
        if name == "pair0":
            entries = [("ref.tap%d" % (i + 1), t) for i, t in enumerate(taps(model, ref))]
            entries += [("dis.tap%d" % (i + 1), t) for i, t in enumerate(taps(model, dis))]
            write_container(parity / "pair0_taps.flpw", entries, {"kind": "taps"})
    (parity / "scores.json").write_text(json.dumps(scores, indent=2, sort_keys=True) + "\n")
    print(json.dumps(scores, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
