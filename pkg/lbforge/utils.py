__all__ = []

import math


def _smallest_odd_above(x):
    """ Smallest odd integer strictly greater than ``x`` """
    k = math.floor(x) + 1
    if k % 2 == 0:
        k += 1
    return max(k, 1)


def _format_decimal(value):
    # 17 significant digits round-trip every float64
    return f"{float(value):.16e}"


def _parse_decimal(value):
    return float(value)


class _dict(dict):
    """ Attribute access dict used for knob sets and parsed descriptors. No surprises """

    def __init__(self, *args, **kwargs):
        super(_dict, self).__init__(*args, **kwargs)
        for arg in args:
            if isinstance(arg, dict):
                for k, v in arg.items():
                    self[k] = v

        if kwargs:
            for k, v in kwargs.items():
                self[k] = v

    def __getattr__(self, attr):
        return self.get(attr)

    def __setattr__(self, key, value):
        self.__setitem__(key, value)

    def __setitem__(self, key, value):
        super(_dict, self).__setitem__(key, value)
        self.__dict__.update({key: value})

    def __delattr__(self, item):
        self.__delitem__(item)

    def __delitem__(self, key):
        super(_dict, self).__delitem__(key)
        del self.__dict__[key]
