"""Property and class names the generator itself relies on.

The engine knows these structural names; everything about maneuver
semantics stays in KB rules.
"""

CONSISTS_OF = "consists_of"
HAS_OPTIONAL = "has_optional"
ENABLES = "enables"
APPLIES_TO = "applies_to"
LEFT_OF = "left_of"
RIGHT_OF = "right_of"
IN_FRONT_OF = "in_front_of"
BEHIND = "behind"
OFFERS_POSITION = "offers_position"
ON = "on"
MAY_PERFORM = "may_perform"
PERFORMS = "performs"
HAS_PARTICIPANT = "has_participant"
HAS_WEATHER = "has_weather"

POSITION = "Position"

REQUIRED_PROPERTIES = (
    CONSISTS_OF,
    HAS_OPTIONAL,
    ENABLES,
    APPLIES_TO,
    LEFT_OF,
    RIGHT_OF,
    IN_FRONT_OF,
    BEHIND,
    OFFERS_POSITION,
    ON,
    MAY_PERFORM,
    PERFORMS,
)
