"""exploitforge: static taint alerts in, validated proof-of-concept exploits out.

The pipeline has three stages wired together by the CLI:

  scan     parse a CommonJS package, run inter-procedural taint analysis,
           group source-to-sink paths into alerts (``alerts.json``)
  exploit  for each alert, drive a budgeted ReAct supervisor that extracts
           constraints, synthesizes exploit candidates, validates them in a
           sandbox, and reflects on failures until it confirms an exploit,
           concludes a false positive, or exhausts its attempt budget
  report   aggregate per-alert verdicts, token usage, and cost
"""

__version__ = "0.1.0"
