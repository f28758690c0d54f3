"""
Copyright (c) 2024 Josephine Siebert Pockelé

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

   http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.

------------------------------------------------------------------------------------------------------------------------

Module with the SVG figures: the segmentation plot of one result and the changepoint rug of a comparison.

------------------------------------------------------------------------------------------------------------------------
"""
from html import escape
from typing import Optional

import numpy as np

from .core import SegmentationResult, changepoints, regions, tidy


__all__ = ['segmentation_svg', 'rug_svg', ]


WIDTH = 960
HEIGHT = 420
MARGIN = 50
TOP = 60
# Half width of the band around the region means, in standard deviations
BAND_Z = 1.96

_FONT = 'font-family="sans-serif"'


class _Frame:
    """
    Maps observation indices and values onto the drawing area.
    """
    def __init__(self, n: int, low: float, high: float, width: int = WIDTH, height: int = HEIGHT) -> None:
        self.n = n
        self.left, self.right = MARGIN, width - MARGIN
        self.top, self.bottom = TOP, height - MARGIN
        pad = .05 * (high - low) if high > low else 1.
        self.low, self.high = low - pad, high + pad

    def x(self, index: float) -> float:
        """
        Horizontal position of a 1-based (possibly fractional) index. Index 1 is at the left edge, n + 1 at the right.
        """
        return self.left + (index - 1.) / max(self.n, 1) * (self.right - self.left)

    def y(self, value: float) -> float:
        return self.bottom - (value - self.low) / (self.high - self.low) * (self.bottom - self.top)


def _axes(frame: _Frame, title: str, width: int = WIDTH, height: int = HEIGHT) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'  <rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'  <text x="{MARGIN}" y="36" fill="#222222" font-size="20" {_FONT}>{escape(title)}</text>',
        f'  <line x1="{frame.left}" y1="{frame.bottom}" x2="{frame.right}" y2="{frame.bottom}" stroke="#888888"/>',
        f'  <line x1="{frame.left}" y1="{frame.top}" x2="{frame.left}" y2="{frame.bottom}" stroke="#888888"/>',
    ]


def _tick_label(labels: Optional[tuple], index: int) -> str:
    return escape(str(labels[index - 1] if labels is not None else index))


def segmentation_svg(result: SegmentationResult, title: Optional[str] = None) -> str:
    """
    Plot a segmentation: the series, a dotted vertical line at every changepoint, and per region the mean with a
    band of 1.96 standard deviations around it.

    Parameters
    ----------
    result : SegmentationResult
        The segmentation result.
    title : str, optional
        Title of the figure. Defaults to the algorithm, model and fitness.

    Returns
    -------
    The SVG document as a string.
    """
    data = result.model.data
    values = data.values
    summary = tidy(result.model)
    sd = np.nan_to_num(summary['sd'].to_numpy(dtype=float))
    means = summary['mean'].to_numpy(dtype=float)

    low = min(values.min(), float(np.min(means - BAND_Z * sd)))
    high = max(values.max(), float(np.max(means + BAND_Z * sd)))
    frame = _Frame(data.n, low, high)

    if title is None:
        title = (f'{result.algorithm} / {result.model.model_name}: {result.fitness_name} = '
                 f'{result.fitness_value:.4f}')
    lines = _axes(frame, title)

    # Bands and means of the regions
    for region, mean, spread in zip(regions(result.tau), means, sd):
        x0, x1 = frame.x(region.start), frame.x(region.end)
        y_top, y_bottom = frame.y(mean + BAND_Z * spread), frame.y(mean - BAND_Z * spread)
        lines.append(f'  <rect class="band" x="{x0:.2f}" y="{y_top:.2f}" width="{x1 - x0:.2f}" '
                     f'height="{y_bottom - y_top:.2f}" fill="#f59e0b" fill-opacity="0.2"/>')
        lines.append(f'  <line class="mean" x1="{x0:.2f}" y1="{frame.y(mean):.2f}" x2="{x1:.2f}" '
                     f'y2="{frame.y(mean):.2f}" stroke="#d97706" stroke-width="2"/>')

    # The series, with every observation at the centre of its unit interval
    points = ' '.join(f'{frame.x(ii + 1.5):.2f},{frame.y(value):.2f}' for ii, value in enumerate(values))
    lines.append(f'  <polyline class="series" points="{points}" fill="none" stroke="#0369a1" stroke-width="1.5"/>')

    for t in result.tau:
        xt = frame.x(t)
        lines.append(f'  <line class="changepoint" x1="{xt:.2f}" y1="{frame.top}" x2="{xt:.2f}" y2="{frame.bottom}" '
                     f'stroke="#444444" stroke-dasharray="2,3"/>')
        lines.append(f'  <text x="{xt + 3:.2f}" y="{frame.top + 12}" fill="#444444" font-size="10" {_FONT}>'
                     f'{_tick_label(data.labels, t)}</text>')

    lines.append(f'  <text x="{frame.left}" y="{HEIGHT - 18}" fill="#666666" font-size="11" {_FONT}>'
                 f'{_tick_label(data.labels, 1)}</text>')
    lines.append(f'  <text x="{frame.right}" y="{HEIGHT - 18}" fill="#666666" font-size="11" text-anchor="end" '
                 f'{_FONT}>{_tick_label(data.labels, data.n)}</text>')
    lines.append('</svg>')
    return '\n'.join(lines) + '\n'


def rug_svg(results: dict[str, SegmentationResult], title: str = 'Changepoints per method') -> str:
    """
    Plot the changepoints of several results on one axis: a row of ticks per method, and a rug of all changepoints
    together along the bottom.

    Parameters
    ----------
    results : dict
        Results keyed by their (unique) run names. All must share the series.
    title : str, optional
        Title of the figure.

    Returns
    -------
    The SVG document as a string.
    """
    if not results:
        raise ValueError('Cannot draw a rug without results.')

    first = next(iter(results.values()))
    n, labels = first.model.data.n, first.model.data.labels
    height = TOP + MARGIN + 30 * (len(results) + 1)
    frame = _Frame(n, 0., 1., height=height)
    lines = _axes(frame, title, height=height)

    everything: list[int] = []
    for row, (name, result) in enumerate(results.items()):
        y = TOP + 15 + 30 * row
        lines.append(f'  <text x="{frame.left - 4}" y="{y + 4}" fill="#222222" font-size="11" text-anchor="end" '
                     f'{_FONT}>{escape(name)}</text>')
        lines.append(f'  <line x1="{frame.left}" y1="{y}" x2="{frame.right}" y2="{y}" stroke="#dddddd"/>')
        for t in changepoints(result):
            everything.append(t)
            lines.append(f'  <line class="changepoint" x1="{frame.x(t):.2f}" y1="{y - 8}" x2="{frame.x(t):.2f}" '
                         f'y2="{y + 8}" stroke="#0369a1" stroke-width="2"/>')

    for t in everything:
        lines.append(f'  <line class="rug" x1="{frame.x(t):.2f}" y1="{frame.bottom - 10}" x2="{frame.x(t):.2f}" '
                     f'y2="{frame.bottom}" stroke="#444444" stroke-opacity="0.5"/>')

    lines.append(f'  <text x="{frame.left}" y="{height - 18}" fill="#666666" font-size="11" {_FONT}>'
                 f'{_tick_label(labels, 1)}</text>')
    lines.append(f'  <text x="{frame.right}" y="{height - 18}" fill="#666666" font-size="11" text-anchor="end" '
                 f'{_FONT}>{_tick_label(labels, n)}</text>')
    lines.append('</svg>')
    return '\n'.join(lines) + '\n'

