#!/usr/bin/env python
# -*- coding: utf-8 -*-

from .detect import *
from .match import *
from .correspondences import *
