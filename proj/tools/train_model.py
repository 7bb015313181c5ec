# SPDX-License-Identifier: Apache-2.0
"""Train the fixed CNN in the clear and export weight CSVs for provider-encode.

CONV (4 maps, k x k, valid) -> ACT-1 -> FC 4(29-k)^2 -> 64 -> ACT-2 -> FC 64 -> 10,
with the two fixed cubic activations used by the encrypted pipeline.

usage: python3 tools/train_model.py <data dir> <out dir> [--epochs E] [--seed S] [--k K]
"""

import argparse
import struct
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

ACT1 = (-0.00015120704, 0.4610149, 2.0225089, -1.4511951)
ACT2 = (-1.5650465, -0.9943767, 1.6794522, 0.5350255)


def read_idx(path):
    data = Path(path).read_bytes()
    magic = struct.unpack(">I", data[:4])[0]
    if magic == 0x803:
        n, h, w = struct.unpack(">III", data[4:16])
        return np.frombuffer(data, np.uint8, offset=16).reshape(n, h, w).astype(np.float32) / 255.0
    if magic == 0x801:
        return np.frombuffer(data, np.uint8, offset=8).astype(np.int64)
    raise ValueError(f"{path}: bad magic {magic:#x}")


class Poly(nn.Module):
    def __init__(self, c):
        super().__init__()
        self.c = c

    def forward(self, x):
        c0, c1, c2, c3 = self.c
        return c0 + x * (c1 + x * (c2 + x * c3))


class Net(nn.Module):
    def __init__(self, k):
        super().__init__()
        side = 29 - k
        self.conv = nn.Conv2d(1, 4, k)
        self.act1 = Poly(ACT1)
        self.fc1 = nn.Linear(4 * side * side, 64)
        self.act2 = Poly(ACT2)
        self.fc2 = nn.Linear(64, 10)

    def forward(self, x):
        x = self.act1(self.conv(x)).flatten(1)  # map-major, row-major within a map
        return self.fc2(self.act2(self.fc1(x)))


def save_csv(path, arr):
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    with open(path, "w") as f:
        for row in arr:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("data")
    ap.add_argument("out")
    ap.add_argument("--epochs", type=int, default=15)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--k", type=int, default=3)
    args = ap.parse_args()
    torch.manual_seed(args.seed)
    torch.set_num_threads(max(1, torch.get_num_threads()))

    d = Path(args.data)
    xtr = torch.tensor(read_idx(d / "train-images.idx")).unsqueeze(1)
    ytr = torch.tensor(read_idx(d / "train-labels.idx"))
    xte = torch.tensor(read_idx(d / "test-images.idx")).unsqueeze(1)
    yte = torch.tensor(read_idx(d / "test-labels.idx"))

    net = Net(args.k).double()
    xtr, xte = xtr.double(), xte.double()
    opt = torch.optim.Adam(net.parameters(), lr=1e-3)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, args.epochs)
    loss_fn = nn.CrossEntropyLoss()
    for epoch in range(args.epochs):
        net.train()
        perm = torch.randperm(len(xtr))
        for i in range(0, len(xtr), 64):
            idx = perm[i : i + 64]
            opt.zero_grad()
            loss = loss_fn(net(xtr[idx]), ytr[idx])
            loss.backward()
            nn.utils.clip_grad_norm_(net.parameters(), 1.0)
            opt.step()
        sched.step()
        net.eval()
        with torch.no_grad():
            acc = (net(xte).argmax(1) == yte).double().mean().item()
        print(f"epoch {epoch + 1}: loss {loss.item():.4f} test accuracy {100 * acc:.2f}%")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    w = net.conv.weight.detach().numpy()
    for m in range(4):
        save_csv(out / f"conv_k{m}.csv", w[m, 0])
    save_csv(out / "conv_bias.csv", net.conv.bias.detach().numpy())
    save_csv(out / "fc1_weight.csv", net.fc1.weight.detach().numpy())
    save_csv(out / "fc1_bias.csv", net.fc1.bias.detach().numpy())
    save_csv(out / "fc2_weight.csv", net.fc2.weight.detach().numpy())
    save_csv(out / "fc2_bias.csv", net.fc2.bias.detach().numpy())
    save_csv(out / "act1.csv", ACT1)
    save_csv(out / "act2.csv", ACT2)
    print(f"weights -> {out}")


if __name__ == "__main__":
    main()
