"""Dataset sources: the synthetic quadrant generator and the IDX reader"""
