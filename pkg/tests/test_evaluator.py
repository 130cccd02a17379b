"""Exact arithmetic, serialization, the run pipeline, and rectification."""

from __future__ import annotations

import datetime
from fractions import Fraction

import pytest

from lexc.evaluator import (
    EvalError,
    EvalErrorKind,
    EvalFailure,
    NoticeEntry,
    OutcomeLedger,
    PayEntry,
    StatusEntry,
    TerminateEntry,
    apply_rectification,
    day_count,
    eval_expr,
    format_eval_error,
    format_ledger,
    round_half_up_cents,
    run,
    serialize_money,
    serialize_value,
)
from lexc.model import Lit, Money, Name, Percent, RectifyRule, SetStatus
from lexc.parser import Scenario, parse, parse_expression, parse_scenario


def evaluate(source: str, **env):
    return eval_expr(parse_expression(source), env)


def eval_error(source: str, **env) -> EvalError:
    with pytest.raises(EvalFailure) as excinfo:
        evaluate(source, **env)
    return excinfo.value.error


# --- day counts --------------------------------------------------------------------


def test_day_count_actual_365_year():
    assert day_count(datetime.date(2023, 1, 1), datetime.date(2023, 12, 31)) == 364


def test_day_count_identity():
    d = datetime.date(2023, 6, 1)
    assert day_count(d, d) == 0


def test_day_count_across_leap_day():
    assert day_count(datetime.date(2024, 2, 28), datetime.date(2024, 3, 1)) == 2


def test_day_count_negative_when_reversed():
    assert day_count(datetime.date(2024, 3, 1), datetime.date(2024, 2, 28)) == -2


# --- arithmetic --------------------------------------------------------------------


def test_interest_component_is_exact():
    value = evaluate("GBP 26_640_000.00 * 7% * days(2023-01-01, 2023-12-31) / 365")
    assert value == Money("GBP", Fraction(26_640_000 * 7 * 364, 100 * 365))
    assert serialize_money(value) == "GBP 1859690.96"


def test_indexation_formula():
    value = evaluate("GBP 100.00 * 110 / 100")
    assert value == Money("GBP", Fraction(110))
    assert serialize_money(value) == "GBP 110.00"


def test_percent_arithmetic():
    assert evaluate("7% + 3%") == Percent(Fraction(1, 10))
    assert evaluate("10% * 2") == Percent(Fraction(1, 5))
    assert evaluate("7% * GBP 100.00") == Money("GBP", Fraction(7))


def test_money_subtraction_and_negation():
    assert evaluate("GBP 3.00 - GBP 5.00") == Money("GBP", Fraction(-2))
    assert evaluate("-GBP 2.50") == Money("GBP", Fraction(-5, 2))


def test_compound_growth():
    assert evaluate("compound(GBP 100.00, 10%, 2)") == Money("GBP", Fraction(121))
    assert evaluate("compound(100, 10%, 3)") == Fraction(1331, 10)


def test_compound_floors_fractional_periods():
    assert evaluate("compound(GBP 100.00, 10%, 2.9)") == Money("GBP", Fraction(121))
    assert evaluate("compound(GBP 100.00, 10%, 9 / 3)") == Money(
        "GBP", Fraction(1331, 10)
    )


def test_compound_rejects_negative_periods():
    error = eval_error("compound(GBP 100.00, 10%, 0 - 1)")
    assert error.kind is EvalErrorKind.NEGATIVE_DAY_COUNT
    assert error.detail == "compound period count evaluated to -1"


def test_min_max_money_and_dates():
    assert evaluate("min(GBP 5.00, GBP 3.00)") == Money("GBP", Fraction(3))
    assert evaluate("max(GBP 5.00, GBP 3.00)") == Money("GBP", Fraction(5))
    assert evaluate("max(2023-01-01, 2024-01-01)") == datetime.date(2024, 1, 1)


def test_comparisons_and_equality():
    assert evaluate("GBP 2.00 < GBP 3.00") is True
    assert evaluate("7% >= 7%") is True
    assert evaluate("2023-01-01 != 2023-01-02") is True
    assert evaluate('"a" == "a"') is True


def test_strings_do_not_order():
    with pytest.raises(TypeError):
        evaluate('"a" < "b"')


def test_division_by_zero_literal():
    error = eval_error("1 / 0")
    assert error.kind is EvalErrorKind.DIVISION_BY_ZERO
    assert error.detail == "divisor evaluated to zero"


def test_division_by_computed_zero():
    assert eval_error("GBP 1.00 / (2 - 2)").kind is EvalErrorKind.DIVISION_BY_ZERO


def test_currency_mismatch_in_addition():
    error = eval_error("GBP 1.00 + USD 1.00")
    assert error.kind is EvalErrorKind.CURRENCY_MISMATCH
    assert error.detail == "GBP and USD mixed in '+'"


def test_currency_mismatch_in_min():
    assert eval_error("min(GBP 1.00, USD 1.00)").kind is EvalErrorKind.CURRENCY_MISMATCH


def test_and_or_short_circuit():
    assert evaluate("false and 1 / 0 == 0") is False
    assert evaluate("true or 1 / 0 == 0") is True


def test_if_evaluates_only_the_taken_branch():
    assert evaluate("if true then 1 else 1 / 0") == 1
    assert evaluate("if false then 1 / 0 else 2") == 2


def test_unbound_name_reports_the_name():
    error = eval_error("mystery + 1")
    assert error.kind is EvalErrorKind.UNBOUND_INPUT
    assert error.detail == "mystery"


def test_environment_lookup():
    assert evaluate("base * 2", base=Fraction(21)) == 42


# --- rounding and serialization ------------------------------------------------------


def test_round_half_up_cents():
    assert round_half_up_cents(Fraction(1, 200)) == 1  # 0.005
    assert round_half_up_cents(Fraction(3, 200)) == 2  # 0.015
    assert round_half_up_cents(Fraction(-1, 200)) == -1  # half away from zero
    assert round_half_up_cents(Fraction(0)) == 0


def test_serialize_money_half_up_exact():
    assert serialize_money(Money("GBP", Fraction(2675, 1000))) == "GBP 2.68"
    assert serialize_money(Money("GBP", Fraction(-2675, 1000))) == "GBP -2.68"


def test_serialize_money_no_negative_zero():
    assert serialize_money(Money("GBP", Fraction(-1, 1000))) == "GBP 0.00"


def test_serialize_money_zero():
    assert serialize_money(Money("GBP", Fraction(0))) == "GBP 0.00"


def test_serialize_money_schedule_cases():
    assert serialize_money(Money("GBP", Fraction(143748, 1000))) == "GBP 143.75"
    assert serialize_money(Money("GBP", Fraction(2000, 91))) == "GBP 21.98"


def test_serialize_money_no_thousands_separators():
    assert serialize_money(Money("GBP", Fraction(2080477440, 73))) == "GBP 28499690.96"


def test_serialize_value_forms():
    assert serialize_value(True) == "true"
    assert serialize_value(False) == "false"
    assert serialize_value(Fraction(5)) == "5"
    assert serialize_value(Fraction(11, 4)) == "2.75"
    assert serialize_value(Fraction(1, 3)) == "1/3"
    assert serialize_value(Percent(Fraction(7, 100))) == "7%"
    assert serialize_value(Percent(Fraction(1, 3))) == "100/3%"
    assert serialize_value(datetime.date(2023, 1, 1)) == "2023-01-01"
    assert serialize_value('say "hi"\\') == '"say \\"hi\\"\\\\"'


def test_format_ledger_frozen_bytes():
    ledger = OutcomeLedger(
        entries=(
            PayEntry("A", "B", Money("GBP", Fraction(1234, 100))),
            StatusEntry("settled", True),
            TerminateEntry("term over"),
            NoticeEntry("posted"),
        )
    )
    assert format_ledger(ledger) == (
        "PAY A B GBP 12.34\nSTATUS settled true\nTERMINATE term over\nNOTICE posted\n"
    )


def test_format_ledger_empty():
    assert format_ledger(OutcomeLedger()) == ""


def test_format_eval_error_line():
    error = EvalError(EvalErrorKind.DIVISION_BY_ZERO, "divisor evaluated to zero")
    assert format_eval_error(error) == "ERROR DivisionByZero divisor evaluated to zero\n"


# --- the run pipeline ----------------------------------------------------------------


def scenario_of(entry, scenario_id: str) -> Scenario:
    return dict(entry.scenarios)[scenario_id]


def test_run_rainy_sky_exact(corpus_by_id):
    entry = corpus_by_id["rainy-sky"]
    ledger = run(entry.ast, scenario_of(entry, "1"))
    assert isinstance(ledger, OutcomeLedger)
    assert ledger.fired_clauses == ("refund_on_demand",)
    [payment] = ledger.payments()
    principal = Fraction(26_640_000)
    assert payment.amount == Money(
        "GBP", principal + principal * Fraction(7, 100) * Fraction(364, 365)
    )
    assert format_ledger(ledger) == "PAY Bank Buyer GBP 28499690.96\n"


def test_run_is_deterministic(corpus_by_id):
    entry = corpus_by_id["arnold-v-britton"]
    first = format_ledger(run(entry.ast, scenario_of(entry, "1983")))
    second = format_ledger(run(entry.ast, scenario_of(entry, "1983")))
    assert first == second


def test_run_missing_input(corpus_by_id):
    entry = corpus_by_id["privacy-international"]
    result = run(entry.ast, Scenario(bindings={}))
    assert isinstance(result, EvalError)
    assert result.kind is EvalErrorKind.UNBOUND_INPUT
    assert result.detail == "secretary_of_state_order"


def test_run_badly_typed_binding(corpus_by_id):
    entry = corpus_by_id["rainy-sky"]
    bindings = dict(scenario_of(entry, "1").bindings)
    bindings["payment_date"] = Fraction(5)
    result = run(entry.ast, Scenario(bindings=bindings))
    assert isinstance(result, EvalError)
    assert result.kind is EvalErrorKind.UNBOUND_INPUT
    assert result.detail == "payment_date expects date, scenario binds number"


def test_run_ignores_extra_bindings(corpus_by_id):
    entry = corpus_by_id["rainy-sky"]
    bindings = dict(scenario_of(entry, "1").bindings)
    bindings["bystander"] = Fraction(1)
    assert format_ledger(run(entry.ast, Scenario(bindings=bindings))) == (
        "PAY Bank Buyer GBP 28499690.96\n"
    )


def test_run_cyclic_definitions():
    ast = parse('contract "T" { let a: number = b;\nlet b: number = a; }')
    result = run(ast, Scenario())
    assert isinstance(result, EvalError)
    assert result.kind is EvalErrorKind.CYCLIC_DEFINITION
    assert result.detail == "definitions form a cycle: a, b"


def test_run_self_referential_definition():
    ast = parse('contract "T" { let a: number = a + 1; }')
    result = run(ast, Scenario())
    assert result.kind is EvalErrorKind.CYCLIC_DEFINITION
    assert result.detail == "definitions form a cycle: a"


def test_definitions_evaluate_in_dependency_order():
    ast = parse(
        'contract "T" {\n'
        "  let second: number = first + 1;\n"
        "  let first: number = 1;\n"
        '  clause c { when true then set out = second; }\n'
        "}"
    )
    ledger = run(ast, Scenario())
    assert ledger.final_statuses() == {"out": Fraction(2)}


def test_status_conflict_within_clause_phase():
    ast = parse(
        'contract "T" {\n'
        "  clause one { when true then set s = 1; }\n"
        "  clause two { when true then set s = 2; }\n"
        "}"
    )
    result = run(ast, Scenario())
    assert isinstance(result, EvalError)
    assert result.kind is EvalErrorKind.STATUS_CONFLICT
    assert result.detail == "status 's' assigned more than once"


def test_runtime_currency_check_backs_up_the_static_one():
    from lexc.model import validate

    ast = parse(
        'contract "T" {\n'
        "  input a: money;\n"
        "  input b: money;\n"
        "  let c: money = a + b;\n"
        "}"
    )
    # statically silent: input currencies are unknown before binding
    assert validate(ast) == []
    result = run(
        ast,
        Scenario(
            bindings={
                "a": Money("GBP", Fraction(1)),
                "b": Money("USD", Fraction(1)),
            }
        ),
    )
    assert isinstance(result, EvalError)
    assert result.kind is EvalErrorKind.CURRENCY_MISMATCH
    assert result.detail == "GBP and USD mixed in '+'"


def test_guard_false_produces_empty_ledger():
    ast = parse('contract "T" { clause c { when false then notice "x"; } }')
    ledger = run(ast, Scenario())
    assert ledger.entries == ()
    assert ledger.fired_clauses == ()


# --- rectification -------------------------------------------------------------------


def clearing_rule() -> RectifyRule:
    return RectifyRule(
        "will", Name("clerical_error"), (SetStatus("clerical_error", Lit(False)),)
    )


def stuck_rule() -> RectifyRule:
    return RectifyRule(
        "will", Name("clerical_error"), (SetStatus("clerical_error", Lit(True)),)
    )


def test_rectification_clears_its_own_guard():
    state = apply_rectification({"clerical_error": True}, (clearing_rule(),))
    assert state == {"clerical_error": False}


def test_rectification_quiet_when_guard_false():
    store = {"clerical_error": False}
    state = apply_rectification(store, (clearing_rule(),))
    assert state == store


def test_rectification_non_convergence_at_default_limit():
    result = apply_rectification({"clerical_error": True}, (stuck_rule(),))
    assert isinstance(result, EvalError)
    assert result.kind is EvalErrorKind.STATUS_CONFLICT
    assert result.detail == "rectification did not converge within 8 passes"


def test_rectification_pass_limit_is_configurable():
    result = apply_rectification({"clerical_error": True}, (stuck_rule(),), max_passes=3)
    assert result.detail == "rectification did not converge within 3 passes"


def test_rule_skipped_while_status_missing():
    state = apply_rectification({"unrelated": True}, (clearing_rule(),))
    assert state == {"unrelated": True}


def test_run_applies_rectification_to_the_ledger(corpus_by_id):
    entry = corpus_by_id["marley"]
    ledger = run(entry.ast, scenario_of(entry, "1"))
    assert format_ledger(ledger) == (
        "STATUS will_valid true\n"
        "STATUS clerical_error false\n"
        "STATUS misunderstood false\n"
        "STATUS rectified true\n"
    )
    # rectified values replace the clause-phase entries in place
    assert [e.name for e in ledger.entries] == [
        "will_valid",
        "clerical_error",
        "misunderstood",
        "rectified",
    ]


def test_run_honours_max_passes():
    ast = parse(
        'contract "T" {\n'
        "  clause c { when true then set a = true; }\n"
        "  rectify r when a { set a = false; }\n"
        "}"
    )
    converged = run(ast, Scenario(), max_passes=2)
    assert converged.final_statuses() == {"a": False}
    limited = run(ast, Scenario(), max_passes=1)
    assert isinstance(limited, EvalError)
    assert limited.detail == "rectification did not converge within 1 passes"
