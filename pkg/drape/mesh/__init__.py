#!/usr/bin/env python
# -*- coding: utf-8 -*-

from .mesh import *
from .io import *
