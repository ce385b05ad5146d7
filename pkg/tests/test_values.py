import pytest
from hypothesis import given

from atomcheck.values import (EXC, UNIT, MapValue, ValueSyntaxError, encode_outcome, format_value,
                              parse_outcome, parse_value, same_value)
from strategies import values


@given(values)
def test_format_parse_round_trip(v):
    assert same_value(parse_value(format_value(v)), v)
    assert same_value(parse_value(format_value(v, arg=True)), v)


def test_notation():
    assert format_value(None) == "null"
    assert format_value(UNIT) == "()"
    assert format_value(EXC) == "E"
    assert format_value((1, 0)) == "[1,0]"
    assert format_value(MapValue({1: 1, 0: 1})) == "[0=1,1=1]"
    assert format_value(MapValue({0: 1, 1: 0}), arg=True) == "{0=1,1=0}"


def test_map_keys_distinct():
    with pytest.raises(ValueError):
        MapValue([(0, 1), (0, 2)])


def test_exceptions_collapse():
    assert same_value(EXC, parse_value("E"))
    assert encode_outcome((EXC,)) == encode_outcome((parse_value("E"),))


def test_true_and_one_encode_differently():
    assert encode_outcome((True,)) != encode_outcome((1,))
    assert not same_value(True, 1)


def test_outcome_aliases_and_brackets():
    assert parse_outcome("null, (), null, true") == (None, UNIT, None, True)
    assert parse_outcome("N, (), N, T") == (None, UNIT, None, True)
    assert parse_outcome("[null,(),null,true]") == (None, UNIT, None, True)
    assert parse_outcome("(0, null, null)") == (0, None, None)


def test_outcome_slot_count_disambiguates():
    assert parse_outcome("[0,1]", 1) == ((0, 1),)
    assert parse_outcome("[0,1]", 2) == (0, 1)
    assert parse_outcome("()", 1) == (UNIT,)


@pytest.mark.parametrize("text", ["nul", "[1,", "{0=1,2}", "1 2"])
def test_syntax_errors(text):
    with pytest.raises(ValueSyntaxError):
        parse_value(text)
