"""
Report serializers for experiment output
"""
from rest_framework import serializers


class ExperimentReportSerializer(serializers.Serializer):
    """Serializer for ExperimentReport (one experiment or repetition)"""

    accepted_count = serializers.IntegerField()
    acceptance_rate = serializers.FloatField()
    mean = serializers.FloatField()
    stderr = serializers.FloatField()
    predicted_mean = serializers.FloatField()
    predicted_delta = serializers.FloatField()
    z_score = serializers.FloatField()
    n_runs = serializers.IntegerField()
    predicted_rate = serializers.FloatField()
    seed = serializers.IntegerField()


class WeakLimitStudySerializer(serializers.Serializer):
    """Serializer for WeakLimitStudy with its per-repetition reports"""

    sigma = serializers.FloatField(source='plan.sigma')
    n = serializers.IntegerField(source='plan.n')
    delta2 = serializers.FloatField(source='plan.delta2')
    repetitions = serializers.SerializerMethodField()
    sample_variance = serializers.SerializerMethodField()
    skewness = serializers.SerializerMethodField()
    excess_kurtosis = serializers.SerializerMethodField()
    reports = ExperimentReportSerializer(many=True)

    def get_repetitions(self, obj):
        return len(obj.reports)

    # moments need at least two repetitions
    def get_sample_variance(self, obj):
        return obj.sample_variance if len(obj.reports) > 1 else None

    def get_skewness(self, obj):
        return obj.skewness if len(obj.reports) > 2 else None

    def get_excess_kurtosis(self, obj):
        return obj.excess_kurtosis if len(obj.reports) > 3 else None


class CollapseBinSerializer(serializers.Serializer):
    label = serializers.IntegerField()
    eigenvalue = serializers.FloatField()
    count = serializers.IntegerField()
    frequency = serializers.FloatField()
    expected = serializers.FloatField()
    stderr = serializers.FloatField()


class CollapseHistogramSerializer(serializers.Serializer):
    """Serializer for CollapseHistogram"""

    n_traj = serializers.IntegerField()
    seed = serializers.IntegerField()
    converged_fraction = serializers.FloatField()
    bins = serializers.SerializerMethodField()

    def get_bins(self, obj):
        return CollapseBinSerializer(list(obj.rows()), many=True).data


class MartingaleCheckSerializer(serializers.Serializer):
    """Serializer for the classical ensemble-average report"""

    n_traj = serializers.IntegerField()
    seed = serializers.IntegerField()
    max_deviation = serializers.FloatField()
    max_z = serializers.FloatField()
    passed = serializers.SerializerMethodField()

    def get_passed(self, obj):
        return obj.passes()


class MeterCaseSerializer(serializers.Serializer):
    case = serializers.IntegerField()
    dim = serializers.IntegerField()
    sigma = serializers.FloatField()
    max_abs_diff = serializers.FloatField()
