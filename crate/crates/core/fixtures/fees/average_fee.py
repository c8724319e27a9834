# Average fee charged for a merchant category code at a given transaction
# amount, over every fee rule that applies to that code.

import json


def rule_applies(rule, mcc):
    codes = rule["merchant_category_code"]
    return len(codes) == 0 or mcc in codes


def compute_fee(rule, amount):
    return rule["fixed_amount"] + rule["rate"] * amount / 10000


def sum_fee(rules, mcc, amount):
    total = 0.0
    for rule in rules:
        if rule_applies(rule, mcc):
            total += compute_fee(rule, amount)
    return total


def average_fee(rules, mcc, amount):
    count = sum(1 for r in rules if len(r["merchant_category_code"]) == 0 or mcc in r["merchant_category_code"])
    if count == 0:
        return 0.0
    return sum_fee(rules, mcc, amount) / count


def output_average_fee(rules, mcc, amount):
    value = average_fee(rules, mcc, amount)
    return round(value, 6)


def find_all_mccs(rules):
    codes = set()
    for rule in rules:
        codes.update(rule["merchant_category_code"])
    return sorted(codes)


with open("fees.json") as f:
    fee_rules = json.load(f)
print(output_average_fee(fee_rules, 5812, 100.0))
