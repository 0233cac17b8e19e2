"""Classification heads: NOAH, the GAP baseline, and their cost accounting"""
