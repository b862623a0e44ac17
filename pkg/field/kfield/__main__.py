# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT

import sys

from kfield.cli import main

sys.exit(main())
