# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Misc functions: smoothed meters for sweep logging, seeding and run metadata.
"""
import datetime
import json
import random
import subprocess
import time
from collections import OrderedDict, deque
from pathlib import Path

import numpy as np
import torch


class SmoothedValue(object):
    """Windowed median of a meter next to its running total over the whole sweep."""

    def __init__(self, window_size=8, fmt="{median:.4g} (sum {total:.4g})"):
        self.window = deque(maxlen=window_size)
        self.total = 0.0
        self.count = 0
        self.fmt = fmt

    def update(self, value):
        self.window.append(float(value))
        self.total += float(value)
        self.count += 1

    @property
    def median(self):
        if not self.window:
            return float('nan')
        return torch.tensor(list(self.window), dtype=torch.float64).median().item()

    @property
    def mean(self):
        return self.total / self.count if self.count else float('nan')

    @property
    def last(self):
        return self.window[-1] if self.window else float('nan')

    def __str__(self):
        return self.fmt.format(median=self.median, mean=self.mean, total=self.total, last=self.last)


class MetricLogger(object):
    """Named meters updated once per sweep point, printed with a progress line."""

    def __init__(self, delimiter="\t"):
        self.meters = OrderedDict()
        self.delimiter = delimiter

    def update(self, **kwargs):
        for name, value in kwargs.items():
            if isinstance(value, torch.Tensor):
                value = value.item()
            assert isinstance(value, (float, int)), "meter {} got {}".format(name, type(value).__name__)
            self.meters.setdefault(name, SmoothedValue()).update(value)

    def __str__(self):
        return self.delimiter.join('{}: {}'.format(name, meter) for name, meter in self.meters.items())

    def totals(self):
        return {name: meter.total for name, meter in self.meters.items()}

    def log_every(self, points, print_freq, header=''):
        """Yield the sweep points, printing meters and an eta after every print_freq of them."""
        points = list(points)
        width = len(str(len(points)))
        step = SmoothedValue()
        start = last = time.time()
        for i, point in enumerate(points):
            yield point
            now = time.time()
            step.update(now - last)
            last = now
            if i % print_freq == 0 or i == len(points) - 1:
                eta = datetime.timedelta(seconds=int(step.mean * (len(points) - 1 - i)))
                print(self.delimiter.join([
                    header, '[{:{}d}/{}]'.format(i, width, len(points)), 'point: {}'.format(point),
                    'eta: {}'.format(eta), str(self), 'step: {:.3f}s'.format(step.last)]))
        if points:
            elapsed = time.time() - start
            print('{} Total time: {} ({:.4f} s / point)'.format(
                header, datetime.timedelta(seconds=int(elapsed)), elapsed / len(points)))


def _git(*command):
    cwd = Path(__file__).resolve().parent
    return subprocess.check_output(('git',) + command, cwd=cwd, stderr=subprocess.DEVNULL).decode('ascii').strip()


def get_sha():
    try:
        sha = _git('rev-parse', 'HEAD')
        status = "has uncommited changes" if _git('diff-index', 'HEAD') else "clean"
        branch = _git('rev-parse', '--abbrev-ref', 'HEAD')
    except (OSError, subprocess.CalledProcessError):
        sha, status, branch = 'N/A', 'clean', 'N/A'
    return f"sha: {sha}, status: {status}, branch: {branch}"


def fix_seed(seed):
    torch.manual_seed(seed)
    np.random.seed(seed)
    random.seed(seed)


def append_log(output_dir, log_stats):
    """One JSON line per finished study."""
    with (Path(output_dir) / "log.txt").open("a") as f:
        f.write(json.dumps(log_stats) + "\n")
