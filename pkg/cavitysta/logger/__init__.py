# encoding=utf-8

from .log import Log, PACKAGE_LOGGER
