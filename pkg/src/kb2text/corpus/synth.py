"""Synthetic person-style corpus generator.

Desk-scale stand-in for a real infobox pipeline: each entity gets a small
table (name, birth date, 1-N team rows optionally carrying match/goal counts
in the same row, citizenship, position) and a templated description that
mentions every value, with each row's values inside a single sentence. The
templates use values verbatim, so collapsing and KB reconstruction are exact
on this data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CorpusError, Example, example_from_text, make_kb

NAME_SLOT = "Name"
BIRTH_SLOT = "Date of birth"
TEAM_SLOT = "Member of sports team"
MATCHES_SLOT = "Matches"
GOALS_SLOT = "Goals"
COUNTRY_SLOT = "Country of citizenship"
POSITION_SLOT = "Position"

DEFAULT_SLOT_TYPES = (
    NAME_SLOT, BIRTH_SLOT, TEAM_SLOT, MATCHES_SLOT, GOALS_SLOT, COUNTRY_SLOT, POSITION_SLOT,
)

FIRST_NAMES = (
    "Arlo", "Bela", "Cato", "Dario", "Elio", "Fabien", "Goran", "Hilda", "Ines", "Jasper",
    "Kaja", "Lenn", "Mira", "Nuno", "Otto", "Petra", "Quint", "Rasa", "Soren", "Tilde",
    "Ugo", "Vera", "Wim", "Ximena", "Yann", "Zora", "Anouk", "Bram", "Cleo", "Dov",
    "Edda", "Filip", "Greta", "Hugo", "Iva", "Janko", "Katja", "Lubo", "Marek", "Nika",
)

LAST_NAMES = (
    "Abalone", "Bracken", "Corvi", "Dunmore", "Eberly", "Farrow", "Gable", "Hollis",
    "Ivorsen", "Jarnik", "Kestrel", "Lidström", "Marder", "Norwick", "Oakes", "Palmer",
    "Quiros", "Rundell", "Severin", "Tamm", "Ulvang", "Vance", "Wexler", "Ynglett",
    "Zeidler", "Almgren", "Borda", "Cravens", "Dienes", "Esler", "Fenwick", "Grahn",
    "Hartl", "Isoma", "Jelen", "Kovar", "Lanning", "Moravec", "Nyberg", "Oliva",
)

TEAM_HEADS = (
    "Kingsmoor", "Redvale", "Ostmark", "Bluewater", "Grayfield", "Southquay", "Northbank",
    "Ironbridge", "Stonegate", "Eastcliff", "Westmoor", "Silverlake", "Oakharbor",
    "Larkspur", "Finchley", "Marrowgate", "Pinecrest", "Saltford", "Thornbury", "Amberhill",
    "Briarholm", "Cedarport", "Dovestone", "Elmswell", "Foxcombe", "Glenrath", "Hazelmere",
    "Juniper Row", "Kilnworth", "Lindenvale",
)

TEAM_TAILS = (
    "United", "Rovers", "Athletic", "Wanderers", "City", "Albion", "Town", "Rangers",
    "Harriers", "Olympic",
)

COUNTRIES = (
    "Norway", "Chile", "Latvia", "Portugal", "Ghana", "Iceland", "Uruguay", "Estonia",
    "Croatia", "Senegal", "Slovenia", "Tunisia",
)

POSITIONS = ("forward", "goalkeeper", "midfielder", "defender", "winger", "striker")

MONTHS = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)


@dataclass(frozen=True)
class SynthSchema:
    """Slot-type catalogue plus the shape knobs of the generated tables.

    With shuffle_singletons on, the single-fact rows (name, birth,
    citizenship, position) land at random row positions around the team
    block, so a model cannot identify a slot purely by its sequence
    position; team rows keep their order, which the description follows.
    """

    slot_types: tuple[str, ...] = DEFAULT_SLOT_TYPES
    min_team_rows: int = 1
    max_team_rows: int = 3
    stat_prob: float = 0.7  # chance a team row also carries matches+goals
    shuffle_singletons: bool = True
    slots_per_table_range: tuple[float, float] = (2.0, 10.0)

    def __post_init__(self):
        if not self.slot_types:
            raise CorpusError("empty schema: at least one slot type required")
        unknown = set(self.slot_types) - set(DEFAULT_SLOT_TYPES)
        if unknown:
            raise CorpusError(f"unknown slot types in schema: {sorted(unknown)}")
        if not (1 <= self.min_team_rows <= self.max_team_rows):
            raise CorpusError("team row bounds must satisfy 1 <= min <= max")


def synth_corpus(n_entities: int, seed: int, schema: SynthSchema | None = None) -> list[Example]:
    """Deterministic synthetic corpus: same (n_entities, seed, schema)
    always reproduces the same examples byte for byte."""
    if n_entities < 1:
        raise CorpusError(f"n_entities must be >= 1, got {n_entities}")
    schema = schema or SynthSchema()
    children = np.random.SeedSequence(seed).spawn(n_entities)
    return [
        _make_entity(f"synth-{i:05d}", np.random.default_rng(children[i]), schema)
        for i in range(n_entities)
    ]


def _draw_distinct_numbers(rng, k: int, lo: int, hi: int, taken: set[str]) -> list[str]:
    out: list[str] = []
    while len(out) < k:
        cand = str(int(rng.integers(lo, hi + 1)))
        if cand not in taken:
            taken.add(cand)
            out.append(cand)
    return out


def _make_entity(entity_id: str, rng, schema: SynthSchema) -> Example:
    types = set(schema.slot_types)
    taken_numbers: set[str] = set()

    name = birth = country = position = None
    singles: list[tuple[str, str]] = []
    if NAME_SLOT in types:
        name = f"{rng.choice(FIRST_NAMES)} {rng.choice(LAST_NAMES)}"
        singles.append((NAME_SLOT, name))
    if BIRTH_SLOT in types:
        day = int(rng.integers(1, 29))
        year = int(rng.integers(1950, 2000))
        birth = f"{day} {rng.choice(MONTHS)} {year}"
        taken_numbers.add(str(day))
        taken_numbers.add(str(year))
        singles.append((BIRTH_SLOT, birth))

    team_rows: list[dict] = []
    if TEAM_SLOT in types:
        n_teams = int(rng.integers(schema.min_team_rows, schema.max_team_rows + 1))
        heads = rng.choice(len(TEAM_HEADS), size=n_teams, replace=False)
        for h in heads:
            team = f"{TEAM_HEADS[h]} {rng.choice(TEAM_TAILS)}"
            info = {"team": team, "matches": None, "goals": None}
            if MATCHES_SLOT in types and rng.random() < schema.stat_prob:
                info["matches"] = _draw_distinct_numbers(rng, 1, 10, 79, taken_numbers)[0]
                if GOALS_SLOT in types:
                    info["goals"] = _draw_distinct_numbers(rng, 1, 2, 49, taken_numbers)[0]
            team_rows.append(info)

    if COUNTRY_SLOT in types:
        country = str(rng.choice(COUNTRIES))
        singles.append((COUNTRY_SLOT, country))
    if POSITION_SLOT in types:
        position = str(rng.choice(POSITIONS))
        singles.append((POSITION_SLOT, position))

    # row layout: each singleton occupies its own row; team rows hold the
    # team plus its stats. The description always follows team order, but
    # singleton rows may sit anywhere in the table.
    blocks: list[list[tuple[str, str]]] = [[s] for s in singles]
    team_block_at = len(blocks)
    blocks.extend(
        [(TEAM_SLOT, info["team"])]
        + ([(MATCHES_SLOT, info["matches"])] if info["matches"] else [])
        + ([(GOALS_SLOT, info["goals"])] if info["goals"] else [])
        for info in team_rows
    )
    order = list(range(len(blocks)))
    if schema.shuffle_singletons and len(singles) > 1:
        n_singles = len(singles)
        slots = list(rng.permutation(len(blocks)))
        single_positions = sorted(slots[:n_singles])
        team_positions = [i for i in range(len(blocks)) if i not in single_positions]
        shuffled_singles = list(rng.permutation(n_singles))
        order = [None] * len(blocks)
        for pos, which in zip(single_positions, shuffled_singles):
            order[pos] = which
        for pos, which in zip(team_positions, range(team_block_at, len(blocks))):
            order[pos] = which

    rows: list[tuple[str, str, int]] = []
    for row_no, block_idx in enumerate(order, start=1):
        for slot_type, slot_value in blocks[block_idx]:
            rows.append((slot_type, slot_value, row_no))

    kb = make_kb(entity_id, rows)
    text = _render_reference(rng, name, birth, team_rows, country, position)
    return example_from_text(kb, text)


def _render_reference(rng, name, birth, team_rows, country, position) -> str:
    pron = "He" if rng.random() < 0.5 else "She"
    sentences: list[str] = []

    opening = str(rng.choice(["a retired footballer", "a professional footballer"]))
    if name is not None and birth is not None:
        sentences.append(f"{name} ( born {birth} ) is {opening} .")
    elif name is not None:
        sentences.append(f"{name} is {opening} .")
    elif birth is not None:
        sentences.append(f"The player ( born {birth} ) is {opening} .")
    else:
        sentences.append(f"The player is {opening} .")

    for info in team_rows:
        verb = str(rng.choice(["played for", "signed with", "joined"]))
        if info["matches"] is not None and info["goals"] is not None:
            sentences.append(
                f"{pron} {verb} {info['team']} appearing in {info['matches']} matches"
                f" and scoring {info['goals']} goals ."
            )
        elif info["matches"] is not None:
            sentences.append(f"{pron} {verb} {info['team']} appearing in {info['matches']} matches .")
        else:
            sentences.append(f"{pron} {verb} {info['team']} .")

    if country is not None and position is not None:
        sentences.append(f"{pron} is a {position} from {country} .")
    elif country is not None:
        sentences.append(f"{pron} comes from {country} .")
    elif position is not None:
        sentences.append(f"{pron} plays as a {position} .")

    return " ".join(sentences)
