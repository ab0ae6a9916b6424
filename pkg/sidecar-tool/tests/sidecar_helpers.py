"""Fixture builders shared by the exporter tests."""

import json


def write_jsonl(path, records):
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    return path


# shared sentences the round-trip assertions look for
REPEATED_SENTENCE = "The total is unchanged."
PLAIN_SENTENCE = "It is raining."
NEGATED_SENTENCE = "It is not raining."


def five_question_fixture():
    """Five questions, ten paths, with a negated pair inside q1 path 0
    and REPEATED_SENTENCE appearing in both q2 and q3."""
    return [
        {
            "question_id": "q1",
            "question": "Will the picnic happen?",
            "paths": [
                {"steps": [PLAIN_SENTENCE, NEGATED_SENTENCE],
                 "raw_text": f"{PLAIN_SENTENCE} {NEGATED_SENTENCE}"},
                {"steps": ["The forecast is clear.", "The picnic happens."],
                 "raw_text": "The forecast is clear. The picnic happens."},
            ],
        },
        {
            "question_id": "q2",
            "question": "What is 7 plus 5?",
            "paths": [
                {"steps": ["Add 7 and 5 to get 12.", REPEATED_SENTENCE],
                 "raw_text": f"Add 7 and 5 to get 12. {REPEATED_SENTENCE}"},
                {"steps": ["Seven plus five equals 12."],
                 "raw_text": "Seven plus five equals 12."},
            ],
        },
        {
            "question_id": "q3",
            "question": "Does the budget change?",
            "paths": [
                {"steps": ["Spending stays at 40.", "Income stays at 40."],
                 "raw_text": "Spending stays at 40. Income stays at 40."},
                {"steps": [REPEATED_SENTENCE, "So the budget balances."],
                 "raw_text": f"{REPEATED_SENTENCE} So the budget balances."},
                {"steps": ["Revenue grows by zero."],
                 "raw_text": "Revenue grows by zero."},
            ],
        },
        {
            "question_id": "q4",
            "question": "How many wheels on 3 cars?",
            "paths": [
                {"steps": ["Each car has 4 wheels.", "Three cars have 12 wheels."],
                 "raw_text": "Each car has 4 wheels. Three cars have 12 wheels."},
            ],
        },
        {
            "question_id": "q5",
            "question": "Is the water boiling?",
            "paths": [
                {"steps": ["The water is at 100 degrees.", "So it is boiling."],
                 "raw_text": "The water is at 100 degrees. So it is boiling."},
                {"steps": ["The pot is still cold."],
                 "raw_text": "The pot is still cold."},
            ],
        },
    ]


def five_question_gold():
    return [
        {"question_id": "q1", "steps": ["The rain stops.", "The picnic happens."]},
        {"question_id": "q2", "steps": ["Add 7 and 5 to get 12."]},
        {"question_id": "q3", "steps": ["Spending equals income.", "The budget balances."]},
        {"question_id": "q4", "steps": ["Each car has 4 wheels.", "Multiply 4 by 3 to get 12."]},
        {"question_id": "q5", "steps": ["Water boils at 100 degrees."]},
    ]


LEXICAL_FLAGS = [
    "--embed-model", "lexical:ngram-256",
    "--nli-model", "lexical:negation",
    "--lm", "lexical:charlm",
]
