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

Module containing all the threading.Thread based tools of the package.

------------------------------------------------------------------------------------------------------------------------
"""
from typing import Any, Callable, Sequence
import threading


__all__ = ['EvaluationThread', 'MethodThread', 'threaded_map', ]


class EvaluationThread(threading.Thread):
    """
    Thread subclass that evaluates a function on a slice of items.

    Parameters
    ----------
    function : callable
        Function of one item.
    items : sequence
        The items to evaluate.
    **kwargs
        Keyword arguments. These are passed on to the threading.Thread constructor.

    Attributes
    ----------
    results : list
        The function values, in the order of the items. Filled when the thread finishes.
    error : BaseException or None
        The exception that stopped the evaluation, if any.
    """
    def __init__(self, function: Callable[[Any], Any], items: Sequence[Any], **kwargs) -> None:
        super().__init__(**kwargs)
        self.function = function
        self.items = items
        self.results = []
        self.error = None

    def run(self) -> None:
        """
        Run function of the Thread. Evaluates the items one by one.
        """
        try:
            self.results = [self.function(item) for item in self.items]
        except BaseException as error:
            self.error = error


class MethodThread(threading.Thread):
    """
    Thread subclass that runs one segmentation method for the comparison of methods.

    Parameters
    ----------
    name : str
        Unique name of the run.
    target_function : callable
        Function without arguments that runs the method.
    **kwargs
        Keyword arguments. These are passed on to the threading.Thread constructor.

    Attributes
    ----------
    result : Any
        Return value of the target function.
    error : Exception or None
        The exception raised by the target function, if any.
    """
    def __init__(self, name: str, target_function: Callable[[], Any], **kwargs) -> None:
        super().__init__(name=name, **kwargs)
        self.target_function = target_function
        self.result = None
        self.error = None

    def run(self) -> None:
        """
        Run function of the Thread. Stores the result or the error of the method.
        """
        try:
            self.result = self.target_function()
        except Exception as error:
            self.error = error


def threaded_map(function: Callable[[Any], Any], items: Sequence[Any], n_jobs: int = 1) -> list[Any]:
    """
    Evaluate a function on every item, spread over a number of threads.

    Parameters
    ----------
    function : callable
        Function of one item. It must not draw random numbers, so the result does not depend on n_jobs.
    items : sequence
        The items.
    n_jobs : int, optional
        Number of threads. With 1 (the default) everything runs in the calling thread.

    Returns
    -------
    List of the function values, in the order of the items.
    """
    items = list(items)
    if n_jobs <= 1 or len(items) <= 1:
        return [function(item) for item in items]

    # Create the threads with contiguous slices of the items
    n_jobs = min(n_jobs, len(items))
    size = -(-len(items) // n_jobs)
    threads = [EvaluationThread(function, items[i0:i0 + size], name=f'evaluation-{ii}')
               for ii, i0 in enumerate(range(0, len(items), size))]

    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()

    results = []
    for thread in threads:
        if thread.error is not None:
            raise thread.error
        results.extend(thread.results)
    return results
