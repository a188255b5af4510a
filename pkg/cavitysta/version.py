# _*_ coding: utf-8 _*_

_major_version = '0'
_minor_version = '3'
_patch_version = '0'

__version__ = f'{_major_version}.{_minor_version}.{_patch_version}'

__title__ = "cavitysta"
__description__ = ("cavitysta simulates shortcuts to adiabatic passage for two Lambda-type atoms "
                   "in a cavity: counter-diabatic and auxiliary drives, closed and open dynamics.")
__doc__ = __description__

__license__ = "MIT"
