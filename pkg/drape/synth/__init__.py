#!/usr/bin/env python
# -*- coding: utf-8 -*-

from .deform import *
from .render import *
from .sequence import *
