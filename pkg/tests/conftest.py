import hypothesis

hypothesis.settings.register_profile(
    "mabc", deadline=None, print_blob=True, derandomize=True
)
hypothesis.settings.load_profile("mabc")
