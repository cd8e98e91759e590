import pytest

from kb2text.corpus import make_kb


@pytest.fixture
def football_kb():
    """The worked example table: 8 rows, 10 triples, row 5 holds a team
    together with its matches and goals counts."""
    return make_kb(
        "silvi-jan",
        [
            ("Name", "Silvi Jan", 1),
            ("Member of sports team", "ASA Tel Aviv University", 2),
            ("Member of sports team", "Hapoel Tel Aviv F.C.(women)", 3),
            ("Member of sports team", "Maccabi Holon F.C. (women)", 4),
            ("Member of sports team", "Israel women's national football team", 5),
            ("Matches", "22", 5),
            ("Goals", "29", 5),
            ("Date of Birth", "27 October 1973", 6),
            ("Country of Citizenship", "Israel", 7),
            ("Position", "Forward (association football)", 8),
        ],
    )
