import pytest
from hypothesis import strategies as st

from ctxanalytics.kb import ConceptAssertion, RoleAssertion, Snapshot, Vocabulary
from ctxanalytics.scenario import build_snapshot

FIG2_TEXT = """\
@snapshot fig2 0
# Business-to-manufacturing context, welding cell
concept Equipment
role uses
inst Equipment Robo-1
rel uses BodyWelding Robo-1
"""


@pytest.fixture
def robo1():
    return build_snapshot("Robo1", id="ot", timestamp=0)


@pytest.fixture
def robo2():
    return build_snapshot("Robo2", id="ot2", timestamp=500)


CONCEPTS = ["A", "B", "C", "D"]
ROLES = ["r", "s", "t"]
INDIVIDUALS = ["i1", "i2", "i3"]


@st.composite
def snapshots(draw, concepts=CONCEPTS, roles=ROLES, timestamp=None):
    """Valid snapshots over a small shared vocabulary, so random pairs overlap."""
    cs = draw(st.sets(st.sampled_from(concepts)))
    rs = draw(st.sets(st.sampled_from(roles)))
    ordered = sorted(cs)
    # child < parent in sort order keeps the subsumption graph acyclic
    pairs = [(a, b) for a in ordered for b in ordered if a < b]
    isa = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    abox = set()
    if cs:
        abox |= draw(
            st.sets(st.builds(ConceptAssertion, st.sampled_from(sorted(cs)), st.sampled_from(INDIVIDUALS)))
        )
    if rs:
        abox |= draw(
            st.sets(
                st.builds(
                    RoleAssertion,
                    st.sampled_from(sorted(rs)),
                    st.sampled_from(INDIVIDUALS),
                    st.sampled_from(INDIVIDUALS),
                )
            )
        )
    t = draw(st.integers(0, 10**6)) if timestamp is None else timestamp
    return Snapshot(f"s{t}", t, Vocabulary(cs, rs, isa), abox)
