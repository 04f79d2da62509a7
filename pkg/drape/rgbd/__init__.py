#!/usr/bin/env python
# -*- coding: utf-8 -*-

from .frame import *
from .segment import *
from .io import *
