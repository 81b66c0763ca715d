"""Brute-force custody fold, written independently of the package.

Plain dicts and linear passes, no shared code with paidata.custody:
this is the oracle the real ledger is checked against. The rules, in
words: the first store event's actor owns a content id forever; only
the owner grants and revokes effectively; a grant needs a subject and
puts it in the active set; a revoke only removes a currently active
subject; everything else changes nothing.  Every event counts toward
the history regardless of effect.
"""


def naive_fold(events):
    """events: iterables of (op_name, content_id, actor, subject).

    Returns {content_id: {"owner", "active", "ever", "n_events",
    "effects"}} where effects is the per-event effective flag list.
    """
    table = {}
    for op_name, content_id, actor, subject in events:
        if content_id not in table:
            table[content_id] = {
                "owner": None,
                "active": set(),
                "ever": set(),
                "n_events": 0,
                "effects": [],
            }
        row = table[content_id]
        row["n_events"] += 1
        effective = False
        if op_name == "store":
            if row["owner"] is None and actor is not None:
                row["owner"] = actor
                effective = True
        elif op_name == "grant":
            if actor is not None and actor == row["owner"] and subject is not None:
                row["active"].add(subject)
                row["ever"].add(subject)
                effective = True
        elif op_name == "revoke":
            if actor is not None and actor == row["owner"] and subject is not None:
                if subject in row["active"]:
                    row["active"].remove(subject)
                    effective = True
        else:
            raise ValueError(op_name)
        row["effects"].append(effective)
    return table


def naive_access(row, address):
    """Access classification straight from the reconstructed sets."""
    if address == row["owner"]:
        return "Owner"
    if address in row["active"]:
        return "Granted"
    if address in row["ever"]:
        return "Revoked"
    return "NoRelation"
