# Cheapest card scheme for a merchant, and the most expensive merchant
# category code for a transaction amount.

import json


def get_mcc_code_from_dsp(merchant, merchant_data):
    for record in merchant_data:
        if record["merchant"] == merchant:
            return record["merchant_category_code"]
    return None


def match_capture_delay(rule_delay, merchant_delay):
    if rule_delay is None:
        return True
    if rule_delay in ("immediate", "manual"):
        return rule_delay == merchant_delay
    return str(merchant_delay) == str(rule_delay)


def match_fee_conditions(rule, record):
    if rule["account_type"] and record["account_type"] not in rule["account_type"]:
        return False
    return match_capture_delay(rule["capture_delay"], record["capture_delay"])


def merchant_matches_fee(rule, record, mcc):
    codes = rule["merchant_category_code"]
    if codes and mcc not in codes:
        return False
    return match_fee_conditions(rule, record)


def compute_fee(rule, amount):
    # Rates are expressed per 10,000 units of the transaction amount.
    return rule["fixed_amount"] + rule["rate"] * amount / 10000.0


def cheapest_card_scheme(rules, merchant, merchant_data, amount):
    mcc = get_mcc_code_from_dsp(merchant, merchant_data)
    record = [r for r in merchant_data if r["merchant"] == merchant][0]
    totals = {}
    for rule in rules:
        if merchant_matches_fee(rule, record, mcc):
            scheme = rule["card_scheme"]
            totals[scheme] = totals.get(scheme, 0.0) + compute_fee(rule, amount)
    return min(totals, key=totals.get)


def most_expensive(rules, amount):
    fees = {}
    for rule in rules:
        fee = compute_fee(rule, amount)
        for mcc in find_all_mccs([rule]):
            fees[mcc] = max(fees.get(mcc, 0.0), fee)
    return max(fees, key=fees.get)


with open("fees.json") as f:
    fee_rules = json.load(f)
with open("merchant_data.json") as f:
    merchants = json.load(f)
print(cheapest_card_scheme(fee_rules, "Crossfit_Hanna", merchants, 50.0))
print(most_expensive(fee_rules, 10.0))
