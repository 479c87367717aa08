"""Generic chain engine over pluggable amalgamation categories."""
from fraisse.engine.audit import check_axioms, extension_property_test
from fraisse.engine.backforth import PartialIso, back_and_forth, homogeneity_witness
from fraisse.engine.categories import Category, Template, make_category
from fraisse.engine.chain import ChainState, LimitElem, Location, build_chain, locate, replay, task_horizon

__all__ = [
    "Category", "Template", "make_category",
    "ChainState", "LimitElem", "Location", "build_chain", "locate", "replay", "task_horizon",
    "PartialIso", "back_and_forth", "homogeneity_witness",
    "check_axioms", "extension_property_test",
]
