import pytest

from limitset.kernels import backends

EX12 = """clauses:
  - f: y*(x^2+y^2-1)
    constraints:
      - {g: 4 - x^2 - y^2, rel: ">="}
"""
EX12_TR = EX12 + "transition_points: [[0, 1], [0, -1]]\n"
CIRCLE = "clauses:\n  - f: x^2+y^2-1\n"
TRIOD = """clauses:
  - f: x*y
    constraints:
      - {g: x, rel: ">="}
      - {g: 1 - x^2 - y^2, rel: ">="}
"""
POINT = "clauses:\n  - f: x^2+y^2\n"
LINE = "clauses:\n  - f: y - 1\n"
TWO_CIRCLES = "clauses:\n  - f: (x^2+y^2-1)*((x-3)^2+y^2-1)\n"


@pytest.fixture(params=sorted(backends()))
def kern(request):
    return backends()[request.param]
