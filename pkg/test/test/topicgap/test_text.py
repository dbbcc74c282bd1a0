"""
Test cases for the `topicgap.text` module
"""
import numpy as np
import pandas as pd
import pytest

from topicgap.text import format_markdown_table, format_number, format_table


def test_format_number() -> None:
    assert format_number(0.123456789) == "0.123457"
    assert format_number(1e-7) == "1e-07"
    assert format_number(np.float64(np.nan)) == "NA"
    assert format_number(np.bool_(True)) == "True"
    assert format_number(3) == "3"
    assert format_number("FP7") == "FP7"


def test_format_table() -> None:
    table = format_table(
        ["k", "loglik"], [[2, -1.5], [10, float("nan")]], alignment=[">", ">"]
    )
    assert table == "k   loglik\n==  ======\n 2    -1.5\n10      NA\n"

    frame = pd.DataFrame({"period": ["AR1", "AR2"], "rate": [0.5, 0.25]})
    assert format_table(["period", "rate"], frame) == (
        "period  rate\n======  ====\nAR1     0.5\nAR2     0.25\n"
    )

    with pytest.raises(ValueError, match="same length as arg headings"):
        format_table(["a", "b"], [[1]])
    with pytest.raises(ValueError, match="alignment options"):
        format_table(["a"], [[1]], alignment=["x"])


def test_format_markdown_table() -> None:
    table = format_markdown_table(["a", "b"], [["x|y", True]], alignment=["<", ">"])
    assert table == "| a | b |\n| :--- | ---: |\n| x\\|y | True |\n"

    centered = format_markdown_table(["k"], [[0.5]], alignment=["^"])
    assert centered.splitlines()[1] == "| :---: |"
