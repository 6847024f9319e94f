"""Small hand-built graphs and queries used by the docs, the CLI and the tests."""
from __future__ import annotations

EX = "http://example.org/"

# Jerry's friends and their sitcoms.  Only Julia acted in a sitcom located in
# New York City; the other New York sitcoms and their casts make the friend
# pattern the most selective one.
SITCOM_NT = "\n".join(
    f"<{EX}{s}> <{EX}{p}> <{EX}{o}> ."
    for s, p, o in [
        ("Jerry", "hasFriend", "Larry"),
        ("Jerry", "hasFriend", "Julia"),
        ("Larry", "hasFriend", "Jerry"),
        ("Julia", "hasFriend", "Elaine"),
        ("Julia", "actedIn", "Seinfeld"),
        ("Julia", "actedIn", "CurbYourEnthu"),
        ("Julia", "actedIn", "Veep"),
        ("Julia", "actedIn", "NewAdvOldChristine"),
        ("Larry", "actedIn", "CurbYourEnthu"),
        ("Jerry", "actedIn", "Seinfeld"),
        ("Jennifer", "actedIn", "Friends"),
        ("Matthew", "actedIn", "Friends"),
        ("Alec", "actedIn", "ThirtyRock"),
        ("Tina", "actedIn", "ThirtyRock"),
        ("Neil", "actedIn", "HIMYM"),
        ("Seinfeld", "location", "NewYorkCity"),
        ("Friends", "location", "NewYorkCity"),
        ("ThirtyRock", "location", "NewYorkCity"),
        ("HIMYM", "location", "NewYorkCity"),
        ("CurbYourEnthu", "location", "LosAngeles"),
        ("NewAdvOldChristine", "location", "LosAngeles"),
        ("Veep", "location", "WashingtonDC"),
    ]
) + "\n"

FRIENDS_SITCOM_QUERY = """PREFIX : <http://example.org/>
SELECT * WHERE {
  :Jerry :hasFriend ?friend .
  OPTIONAL {
    ?friend :actedIn ?sitcom .
    ?sitcom :location :NewYorkCity .
  }
}
"""

# (Pa OPT Pb) JOIN ((Pc OPT Pd) JOIN (Pe OPT Pf)) where Pb and Pf use ?j,
# which is bound in Pc but in neither of their own left sides.
NWD_QUERY = """PREFIX : <http://example.org/>
SELECT * WHERE {
  { ?a :p ?b OPTIONAL { ?b :q ?j } }
  { { ?a :r ?j OPTIONAL { ?a :s ?d } }
    { ?a :t ?e OPTIONAL { ?e :u ?j } } }
}
"""
