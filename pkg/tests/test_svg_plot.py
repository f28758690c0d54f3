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

Tests of the SVG figures.

------------------------------------------------------------------------------------------------------------------------
"""
import xml.etree.ElementTree as ElementTree

import pytest

from cptseg import TimeSeries, manual, null_segmentation, rug_svg, segmentation_svg


SVG = '{http://www.w3.org/2000/svg}'


def _elements(document: str, tag: str, css_class: str) -> list:
    root = ElementTree.fromstring(document)
    return [element for element in root.iter(f'{SVG}{tag}') if element.get('class') == css_class]


class TestSegmentationSvg:
    @pytest.mark.parametrize('tau', [(), (31, ), (11, 31, 45)])
    def test_one_marker_per_changepoint(self, step_series: TimeSeries, tau: tuple) -> None:
        document = segmentation_svg(manual(step_series, tau))
        assert len(_elements(document, 'line', 'changepoint')) == len(tau)
        assert len(_elements(document, 'rect', 'band')) == len(tau) + 1
        assert len(_elements(document, 'line', 'mean')) == len(tau) + 1
        assert len(_elements(document, 'polyline', 'series')) == 1

    def test_title_is_escaped(self, step_series: TimeSeries) -> None:
        document = segmentation_svg(null_segmentation(step_series), title='a < b & c')
        assert 'a &lt; b &amp; c' in document
        ElementTree.fromstring(document)

    def test_date_labels(self) -> None:
        series = TimeSeries([0., .2, 5., 5.3], ('2020-01-01', '2020-02-01', '2020-03-01', '2020-04-01'))
        document = segmentation_svg(manual(series, (3, )))
        assert '2020-03-01' in document


class TestRugSvg:
    def test_ticks_per_result(self, step_series: TimeSeries) -> None:
        results = {'null': null_segmentation(step_series), 'manual': manual(step_series, (20, 31))}
        document = rug_svg(results)
        assert len(_elements(document, 'line', 'changepoint')) == 2
        assert len(_elements(document, 'line', 'rug')) == 2
        assert 'manual' in document

    def test_needs_results(self) -> None:
        with pytest.raises(ValueError, match='without results'):
            rug_svg({})
